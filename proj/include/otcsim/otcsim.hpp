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

#pragma once

#include "otcsim/types.hpp"
#include "otcsim/gaussian.hpp"
#include "otcsim/timelike.hpp"
#include "otcsim/fock.hpp"
#include "otcsim/fock_circuit.hpp"
#include "otcsim/deutsch.hpp"
#include "otcsim/wavepacket.hpp"
#include "otcsim/experiments.hpp"
#include "otcsim/circuit_io.hpp"
#include "otcsim/svg.hpp"
#include "otcsim/runner.hpp"
