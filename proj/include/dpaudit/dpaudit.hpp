// Copyright 2026 The dpaudit Authors
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

#ifndef DPAUDIT_DPAUDIT_HPP_
#define DPAUDIT_DPAUDIT_HPP_

#include "dpaudit/common.hpp"
#include "dpaudit/estimator.hpp"
#include "dpaudit/game.hpp"
#include "dpaudit/harness.hpp"
#include "dpaudit/mechanisms.hpp"
#include "dpaudit/normal.hpp"
#include "dpaudit/prng.hpp"
#include "dpaudit/report.hpp"
#include "dpaudit/scores.hpp"
#include "dpaudit/smallnet.hpp"
#include "dpaudit/sweep.hpp"

#endif  // DPAUDIT_DPAUDIT_HPP_
