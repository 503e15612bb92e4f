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

#ifndef PASSIM_FLOPS_HPP
#define PASSIM_FLOPS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "paformer.hpp"
#include "pamoe.hpp"

// Analytic complexity accounting from layer shapes, per forward pass of a
// single sample. Counting rule: one unit per multiply-accumulate of a matrix
// product (a linear layer on M tokens costs M * d_in * d_out) plus elementwise
// multiplies (gates, expert weighting); bias adds, activations, softmax and
// normalization are not counted.

namespace passim {

struct ComplexityReport {
    std::string model_id;
    std::uint64_t params = 0;
    struct Entry {
        int N = 0;
        std::uint64_t flops = 0;
    };
    std::vector<Entry> per_n;
};

inline std::uint64_t count_params(const PAMoEConfig &cfg) {
    const auto d = static_cast<std::uint64_t>(cfg.d_hid);
    const auto nm = static_cast<std::uint64_t>(cfg.N_max);
    const auto f = static_cast<std::uint64_t>(cfg.F);
    const auto sw = static_cast<std::uint64_t>(2 * cfg.T);
    const auto e = static_cast<std::uint64_t>(cfg.E);
    const auto dout = static_cast<std::uint64_t>(cfg.d_out);

    std::uint64_t p = 0;
    p += 1 + sw;                       // padding embeddings phi1, phi2
    p += 2 * f * d + d;                // positional projection
    p += (sw * d + d) + (d * d + d);   // signal MLP
    p += d * d + d;                    // fusion gate
    const std::uint64_t expert = (2 * d) + (nm * 2 * nm + 2 * nm) + (2 * nm * nm + nm) // ln1 + token MLP
                                 + (2 * d) + (d * 2 * d + 2 * d) + (2 * d * d + d);    // ln2 + channel MLP
    p += e * expert;
    p += d * e + e;                    // gating head
    p += 2 * d * dout + dout;          // output head
    return p;
}

inline std::uint64_t count_params(const PAformerConfig &cfg) {
    const auto d = static_cast<std::uint64_t>(cfg.d_hid);
    const auto tw = static_cast<std::uint64_t>(2 * cfg.T + 1);
    const auto fw = static_cast<std::uint64_t>(cfg.ffn_mult) * d;
    const auto blocks = static_cast<std::uint64_t>(cfg.P_blocks);
    const auto dout = static_cast<std::uint64_t>(cfg.d_out);

    std::uint64_t p = (tw * d + d) + (d * d + d); // embedding MLP
    std::uint64_t block = 2 * d;                  // ln1
    if (!cfg.strict_paper_block)
        block += 2 * d;                           // ln2
    block += 4 * (d * d + d);                     // q, k, v, o projections
    block += (d * fw + fw) + (fw * d + d);        // FFN
    p += blocks * block;
    p += d * dout + dout;                         // output head
    return p;
}

/// PAMoE cost is evaluated at N_max regardless of the deployed N: padding
/// fixes every internal shape.
inline std::uint64_t count_flops(const PAMoEConfig &cfg, int /*n*/) {
    const auto d = static_cast<std::uint64_t>(cfg.d_hid);
    const auto nm = static_cast<std::uint64_t>(cfg.N_max);
    const auto f = static_cast<std::uint64_t>(cfg.F);
    const auto sw = static_cast<std::uint64_t>(2 * cfg.T);
    const auto e = static_cast<std::uint64_t>(cfg.E);
    const auto dout = static_cast<std::uint64_t>(cfg.d_out);

    std::uint64_t c = 0;
    c += nm * f;                        // frequency outer product
    c += nm * 2 * f * d;                // positional projection
    c += nm * (sw * d + d * d);         // signal MLP
    c += nm * d * d + nm * d;           // gate linear + gate multiply
    const std::uint64_t expert = 4 * d * nm * nm   // token-mixing MLP (both layers)
                                 + 4 * nm * d * d; // channel-mixing MLP (both layers)
    c += e * expert;
    c += d * e;                         // gating head
    c += e * nm * d;                    // expert weighting
    c += nm * 2 * d * dout;             // output head
    return c;
}

/// PAformer cost: token-wise terms linear in N plus attention terms quadratic
/// in N; strictly increasing in N.
inline std::uint64_t count_flops(const PAformerConfig &cfg, int n) {
    const auto d = static_cast<std::uint64_t>(cfg.d_hid);
    const auto nn = static_cast<std::uint64_t>(n);
    const auto tw = static_cast<std::uint64_t>(2 * cfg.T + 1);
    const auto fw = static_cast<std::uint64_t>(cfg.ffn_mult) * d;
    const auto blocks = static_cast<std::uint64_t>(cfg.P_blocks);
    const auto dout = static_cast<std::uint64_t>(cfg.d_out);

    std::uint64_t c = nn * (tw * d + d * d);      // embedding MLP
    std::uint64_t block = 4 * nn * d * d;         // q, k, v, o projections
    block += 2 * nn * nn * d;                     // scores and value mixing, summed over heads
    block += nn * (d * fw + fw * d);              // FFN
    c += blocks * block;
    c += nn * d * dout;                           // output head
    return c;
}

inline std::uint64_t count_flops_by_id(const std::string &model_id, const std::string &config_text, int n) {
    if (model_id == kPamoeModelId)
        return count_flops(PAMoEConfig::from_text(config_text), n);
    if (model_id == kPaformerModelId)
        return count_flops(PAformerConfig::from_text(config_text), n);
    throw ConfigError("count_flops: unknown model id '" + model_id + "'");
}

inline std::uint64_t count_params_by_id(const std::string &model_id, const std::string &config_text) {
    if (model_id == kPamoeModelId)
        return count_params(PAMoEConfig::from_text(config_text));
    if (model_id == kPaformerModelId)
        return count_params(PAformerConfig::from_text(config_text));
    throw ConfigError("count_params: unknown model id '" + model_id + "'");
}

inline ComplexityReport complexity_report(const std::string &model_id, const std::string &config_text,
                                          const std::vector<int> &n_list) {
    ComplexityReport rep;
    rep.model_id = model_id;
    rep.params = count_params_by_id(model_id, config_text);
    for (int n : n_list)
        rep.per_n.push_back({n, count_flops_by_id(model_id, config_text, n)});
    return rep;
}

} // namespace passim

#endif // PASSIM_FLOPS_HPP
