/*
 * Copyright 2026 The chpdet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHPDET_CHPDET_HPP
#define CHPDET_CHPDET_HPP

#include "chpdet/decoder.hpp"
#include "chpdet/error.hpp"
#include "chpdet/evaluator.hpp"
#include "chpdet/geometry.hpp"
#include "chpdet/io.hpp"
#include "chpdet/losses.hpp"
#include "chpdet/nms.hpp"
#include "chpdet/oim.hpp"
#include "chpdet/size_prior.hpp"
#include "chpdet/synth.hpp"
#include "chpdet/target_encoder.hpp"
#include "chpdet/tensor.hpp"
#include "chpdet/tiling.hpp"

#endif
