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

#ifndef PASSIM_MODEL_REGISTRY_HPP
#define PASSIM_MODEL_REGISTRY_HPP

#include <memory>
#include <string>

#include "common.hpp"
#include "diff/param_store.hpp"
#include "estimator.hpp"
#include "paformer.hpp"
#include "pamoe.hpp"

namespace passim {

/// Builds a freshly initialized estimator from a model id and config text.
inline std::unique_ptr<NeuralEstimator> make_estimator(const std::string &model_id,
                                                       const std::string &config_text,
                                                       std::uint64_t init_seed) {
    if (model_id == kPamoeModelId)
        return std::make_unique<PAMoE>(PAMoEConfig::from_text(config_text), init_seed);
    if (model_id == kPaformerModelId)
        return std::make_unique<PAformer>(PAformerConfig::from_text(config_text), init_seed);
    throw ConfigError("make_estimator: unknown model id '" + model_id + "'");
}

/// Reconstructs an estimator from a checkpoint (architecture from the embedded
/// config text, then parameter arrays loaded shape-checked).
inline std::unique_ptr<NeuralEstimator> load_estimator(const diff::Checkpoint &ck) {
    auto model = make_estimator(ck.model_id, ck.model_config_text, /*init_seed=*/1);
    diff::load_into_store(ck, model->store());
    return model;
}

inline std::unique_ptr<NeuralEstimator> load_estimator_file(const std::string &path) {
    return load_estimator(diff::load_checkpoint(path));
}

} // namespace passim

#endif // PASSIM_MODEL_REGISTRY_HPP
