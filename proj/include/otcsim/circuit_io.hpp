// Copyright 2026 The otcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON form of a Circuit. See docs/circuit-format.md.

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "otcsim/timelike.hpp"

namespace otcsim::io {

using json = nlohmann::json;

inline constexpr int kCircuitSchemaVersion = 1;

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

inline double number(const json& obj, const char* key, const std::string& where, double fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, where + "." + key);
}

inline std::size_t index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(where, "expected a non-negative integer");
  return v.get<std::size_t>();
}

/// A real number, or [re, im].
inline cplx complex_value(const json& v, const std::string& where) {
  if (v.is_number()) return {number(v, where), 0.0};
  if (v.is_array() && v.size() == 2) return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
  fail(where, "expected a number or [re, im]");
}

inline std::vector<std::size_t> index_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of mode indices");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(index(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline void only_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) fail(where, "unknown field '" + k + "'");
  }
}

inline CircuitElement element(const json& e, const std::string& where) {
  if (!e.is_object()) fail(where, "expected an object");
  const auto& kind_v = field(e, "kind", where);
  if (!kind_v.is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = kind_v.get<std::string>();
  if (kind == "displace") {
    only_keys(e, {"kind", "mode", "alpha"}, where);
    return Displacement{index(field(e, "mode", where), where + ".mode"),
                        complex_value(field(e, "alpha", where), where + ".alpha")};
  }
  if (kind == "rotate") {
    only_keys(e, {"kind", "mode", "angle"}, where);
    return Rotation{index(field(e, "mode", where), where + ".mode"),
                    number(field(e, "angle", where), where + ".angle")};
  }
  if (kind == "squeeze") {
    only_keys(e, {"kind", "mode", "r", "theta"}, where);
    return Squeezer{index(field(e, "mode", where), where + ".mode"), number(field(e, "r", where), where + ".r"),
                    internal_angle(number(e, "theta", where, 0.0))};
  }
  if (kind == "beamsplitter") {
    only_keys(e, {"kind", "modes", "transmissivity"}, where);
    const auto m = index_list(field(e, "modes", where), where + ".modes");
    if (m.size() != 2) fail(where + ".modes", "a beamsplitter needs exactly two modes");
    return BeamSplitter{m[0], m[1], number(e, "transmissivity", where, 0.5)};
  }
  if (kind == "otc") {
    only_keys(e, {"kind", "modes", "xi", "time_shift"}, where);
    return OtcElement{index_list(field(e, "modes", where), where + ".modes"), number(e, "xi", where, 0.0),
                      number(e, "time_shift", where, 0.0)};
  }
  fail(where + ".kind", "unknown element kind '" + kind + "'");
}

}  // namespace detail

inline Circuit circuit_from_json(const json& j) {
  const std::string where = "circuit";
  if (!j.is_object()) detail::fail(where, "expected an object");
  detail::only_keys(j, {"schema_version", "num_modes", "elements"}, where);
  const auto& ver = detail::field(j, "schema_version", where);
  if (!ver.is_number_integer() || ver.get<int>() != kCircuitSchemaVersion)
    detail::fail(where + ".schema_version", "unsupported version (expected " + std::to_string(kCircuitSchemaVersion) + ")");
  const std::size_t n = detail::index(detail::field(j, "num_modes", where), where + ".num_modes");
  if (n == 0) detail::fail(where + ".num_modes", "need at least one mode");
  Circuit c(n);
  const auto it = j.find("elements");
  if (it == j.end()) return c;
  if (!it->is_array()) detail::fail(where + ".elements", "expected an array");
  for (std::size_t k = 0; k < it->size(); ++k) {
    const std::string at = where + ".elements[" + std::to_string(k) + "]";
    try {
      c.add(detail::element((*it)[k], at));
    } catch (const ParseError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      detail::fail(at, e.what());
    }
  }
  return c;
}

inline json to_json(const CircuitElement& element) {
  return std::visit(
      [](const auto& g) -> json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Displacement>) {
          return {{"kind", "displace"}, {"mode", g.mode}, {"alpha", {g.alpha.real(), g.alpha.imag()}}};
        } else if constexpr (std::is_same_v<G, Rotation>) {
          return {{"kind", "rotate"}, {"mode", g.mode}, {"angle", g.angle}};
        } else if constexpr (std::is_same_v<G, Squeezer>) {
          return {{"kind", "squeeze"}, {"mode", g.mode}, {"r", g.r}, {"theta", internal_angle(g.angle)}};
        } else if constexpr (std::is_same_v<G, BeamSplitter>) {
          return {{"kind", "beamsplitter"}, {"modes", {g.mode_a, g.mode_b}}, {"transmissivity", g.transmissivity}};
        } else {
          return {{"kind", "otc"}, {"modes", g.modes}, {"xi", g.xi}, {"time_shift", g.time_shift}};
        }
      },
      element);
}

inline json to_json(const Circuit& c) {
  json elements = json::array();
  for (const auto& e : c.elements()) elements.push_back(to_json(e));
  return {{"schema_version", kCircuitSchemaVersion}, {"num_modes", c.num_modes()}, {"elements", elements}};
}

inline json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

inline Circuit load_circuit(const std::string& path) { return circuit_from_json(read_json_file(path)); }

}  // namespace otcsim::io
