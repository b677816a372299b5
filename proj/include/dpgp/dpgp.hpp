/*
 * Copyright 2026 the dpgp authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DPGP_DPGP_HPP
#define DPGP_DPGP_HPP

#include "dpgp/classification.hpp"
#include "dpgp/cloaking.hpp"
#include "dpgp/data.hpp"
#include "dpgp/hyperselect.hpp"
#include "dpgp/kernels.hpp"
#include "dpgp/linalg.hpp"
#include "dpgp/regression.hpp"
#include "dpgp/rng.hpp"
#include "dpgp/sparse.hpp"

#endif  // DPGP_DPGP_HPP
