// SPDX-License-Identifier: Apache-2.0
//
// passim — pinching-antenna system simulation and channel estimation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PASSIM_PASSIM_HPP
#define PASSIM_PASSIM_HPP

#include "channel.hpp"
#include "classical.hpp"
#include "common.hpp"
#include "dataset_io.hpp"
#include "diff/param_store.hpp"
#include "diff/tensor.hpp"
#include "estimator.hpp"
#include "flops.hpp"
#include "model_registry.hpp"
#include "paformer.hpp"
#include "pamoe.hpp"
#include "pilots.hpp"
#include "rng.hpp"
#include "scene.hpp"
#include "sweep.hpp"
#include "trainer.hpp"

#endif // PASSIM_PASSIM_HPP
