// Copyright 2026 The ShareBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#ifndef SHAREBENCH_SHAREBENCH_HPP_
#define SHAREBENCH_SHAREBENCH_HPP_

#include "sharebench/data.hpp"
#include "sharebench/diffusion.hpp"
#include "sharebench/downstream.hpp"
#include "sharebench/error.hpp"
#include "sharebench/experiment.hpp"
#include "sharebench/fpa.hpp"
#include "sharebench/gmm.hpp"
#include "sharebench/json_io.hpp"
#include "sharebench/mi.hpp"
#include "sharebench/oracle.hpp"
#include "sharebench/pia.hpp"
#include "sharebench/random.hpp"

#endif  // SHAREBENCH_SHAREBENCH_HPP_
