// Copyright 2026 The lnecg Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the lnecg library.

#ifndef LNECG_LNECG_HPP_
#define LNECG_LNECG_HPP_

#include "lnecg/conjugacy.hpp"
#include "lnecg/core.hpp"
#include "lnecg/experiment.hpp"
#include "lnecg/games.hpp"
#include "lnecg/metrics.hpp"
#include "lnecg/schedules.hpp"
#include "lnecg/solver.hpp"

#endif  // LNECG_LNECG_HPP_
