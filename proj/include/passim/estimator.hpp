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

#ifndef PASSIM_ESTIMATOR_HPP
#define PASSIM_ESTIMATOR_HPP

#include <map>
#include <string>
#include <vector>

#include "common.hpp"
#include "diff/param_store.hpp"
#include "diff/tensor.hpp"
#include "pilots.hpp"

namespace passim {

/// Common surface of the neural channel estimators. Inputs are batched
/// antenna positions P (B x N x 1) and lifted pilot features S (B x N x 2T);
/// the output is the estimated channel (B x N x 2).
class NeuralEstimator {
  public:
    virtual ~NeuralEstimator() = default;

    virtual std::string model_id() const = 0;
    virtual diff::Tensor forward(const diff::Tensor &positions, const diff::Tensor &signals) = 0;
    virtual diff::ParamStore &store() = 0;
    virtual const diff::ParamStore &store() const = 0;
    virtual std::string model_config_text() const = 0;
    /// Largest admissible N, or 0 when the architecture has no ceiling.
    virtual int max_antennas() const = 0;
    virtual int pilot_slots() const = 0;
};

/// Packs a contiguous range of dataset records into batch tensors.
struct BatchTensors {
    diff::Tensor positions; // B x N x 1
    diff::Tensor signals;   // B x N x 2T
    diff::Tensor labels;    // B x N x 2
};

inline BatchTensors pack_batch(const std::vector<DatasetRecord> &records,
                               const std::vector<std::size_t> &indices) {
    if (indices.empty())
        throw ShapeError("pack_batch: empty batch");
    const auto &first = records[indices.front()];
    const auto b = indices.size();
    const auto n = static_cast<std::size_t>(first.N);
    const auto two_t = first.Y_bar.cols;

    std::vector<double> p(b * n), s(b * n * two_t), h(b * n * 2);
    for (std::size_t bi = 0; bi < b; ++bi) {
        const auto &rec = records[indices[bi]];
        if (static_cast<std::size_t>(rec.N) != n || rec.Y_bar.cols != two_t)
            throw ShapeError("pack_batch: records have inconsistent shapes");
        std::copy_n(rec.pa_x.data(), n, p.data() + bi * n);
        std::copy_n(rec.Y_bar.data.data(), n * two_t, s.data() + bi * n * two_t);
        std::copy_n(rec.H_bar.data.data(), n * 2, h.data() + bi * n * 2);
    }
    BatchTensors out;
    out.positions = diff::Tensor({b, n, 1}, std::move(p));
    out.signals = diff::Tensor({b, n, two_t}, std::move(s));
    out.labels = diff::Tensor({b, n, 2}, std::move(h));
    return out;
}

namespace detail {

/// Minimal "key = value" text for model/train configs embedded in checkpoints.
inline std::map<std::string, std::string> parse_kv_text(const std::string &text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        kv[passim::detail::trim(line.substr(0, eq))] = passim::detail::trim(line.substr(eq + 1));
    }
    return kv;
}

inline int kv_int(const std::map<std::string, std::string> &kv, const std::string &key, int fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : static_cast<int>(passim::detail::parse_int(key, it->second));
}

inline double kv_double(const std::map<std::string, std::string> &kv, const std::string &key,
                        double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : passim::detail::parse_double(key, it->second);
}

} // namespace detail

} // namespace passim

#endif // PASSIM_ESTIMATOR_HPP
