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

#ifndef PASSIM_PAFORMER_HPP
#define PASSIM_PAFORMER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "diff/param_store.hpp"
#include "diff/tensor.hpp"
#include "estimator.hpp"
#include "rng.hpp"

namespace passim {

inline constexpr const char *kPaformerModelId = "paformer-v1";

/// Set-style attention estimator: per-antenna token embedding of concatenated
/// position and pilot features, P stacked self-attention blocks, per-antenna
/// linear head. Permutation-equivariant over the antenna axis and free of any
/// fixed antenna-count ceiling.
struct PAformerConfig {
    int d_hid = 64;
    int P_blocks = 4;
    int n_heads = 4;
    int ffn_mult = 2;
    int T = 4;
    int d_out = 2;
    bool strict_paper_block = true; // single pre-MHA layernorm, as printed

    void validate() const {
        if (P_blocks < 1)
            throw ConfigError("PAformerConfig: P_blocks must be >= 1");
        if (n_heads < 1 || d_hid % n_heads != 0)
            throw ConfigError("PAformerConfig: d_hid=" + std::to_string(d_hid) +
                              " must be divisible by n_heads=" + std::to_string(n_heads));
        if (ffn_mult < 1)
            throw ConfigError("PAformerConfig: ffn_mult must be >= 1");
        if (T < 1)
            throw ConfigError("PAformerConfig: T must be >= 1");
        if (d_out != 2)
            throw ConfigError("PAformerConfig: d_out must be 2");
    }

    std::string to_text() const {
        std::ostringstream out;
        out << "model = " << kPaformerModelId << "\n"
            << "d_hid = " << d_hid << "\nP_blocks = " << P_blocks << "\nn_heads = " << n_heads
            << "\nffn_mult = " << ffn_mult << "\nT = " << T << "\nd_out = " << d_out
            << "\nstrict_paper_block = " << (strict_paper_block ? 1 : 0) << "\n";
        return out.str();
    }

    static PAformerConfig from_text(const std::string &text) {
        const auto kv = detail::parse_kv_text(text);
        PAformerConfig c;
        c.d_hid = detail::kv_int(kv, "d_hid", c.d_hid);
        c.P_blocks = detail::kv_int(kv, "P_blocks", c.P_blocks);
        c.n_heads = detail::kv_int(kv, "n_heads", c.n_heads);
        c.ffn_mult = detail::kv_int(kv, "ffn_mult", c.ffn_mult);
        c.T = detail::kv_int(kv, "T", c.T);
        c.d_out = detail::kv_int(kv, "d_out", c.d_out);
        c.strict_paper_block = detail::kv_int(kv, "strict_paper_block", c.strict_paper_block ? 1 : 0) != 0;
        c.validate();
        return c;
    }
};

class PAformer : public NeuralEstimator {
  public:
    explicit PAformer(const PAformerConfig &cfg, std::uint64_t init_seed = 1) : cfg_(cfg) {
        cfg_.validate();
        build_params(init_seed);
    }

    std::string model_id() const override { return kPaformerModelId; }
    const PAformerConfig &config() const { return cfg_; }
    diff::ParamStore &store() override { return store_; }
    const diff::ParamStore &store() const override { return store_; }
    std::string model_config_text() const override { return cfg_.to_text(); }
    int max_antennas() const override { return 0; } // no ceiling
    int pilot_slots() const override { return cfg_.T; }

    /// Token embedding of V = concat[P, S] (width 2T+1), applied per antenna.
    diff::Tensor input_embed(const diff::Tensor &positions, const diff::Tensor &signals) {
        using namespace diff;
        if (positions.ndim() != 3 || signals.ndim() != 3 || positions.dim(2) != 1 ||
            positions.dim(0) != signals.dim(0) || positions.dim(1) != signals.dim(1))
            throw ShapeError("paformer: positions " + shape_str(positions.shape()) + " and signals " +
                             shape_str(signals.shape()) + " are not a valid (B,N,1)/(B,N,2T) pair");
        if (signals.dim(2) != static_cast<std::size_t>(2 * cfg_.T))
            throw ShapeError("paformer: signals must be (B,N," + std::to_string(2 * cfg_.T) + "), got " +
                             shape_str(signals.shape()));
        Tensor v = concat({positions, signals}, 2);
        Tensor z = linear(v, store_.get("embed.l1.W"), store_.get("embed.l1.b"));
        return linear(gelu(z), store_.get("embed.l2.W"), store_.get("embed.l2.b"));
    }

    /// One self-attention block. With strict_paper_block the residual path is
    /// Zb = LN(Z); Z' = Zb + MHA(Zb); out = Z' + FFN(Z') — exactly one
    /// layernorm per block, as printed. Otherwise the conventional two-norm
    /// pre-norm block is used. Optionally captures per-head attention weights.
    diff::Tensor sab_forward(const diff::Tensor &z_in, int block,
                             std::vector<diff::Tensor> *attention_out = nullptr) {
        using namespace diff;
        const std::string p = "block" + std::to_string(block) + ".";
        if (cfg_.strict_paper_block) {
            Tensor zb = affine_layernorm(z_in, p + "ln1");
            Tensor zr = add(zb, attention(zb, p, attention_out));
            return add(zr, ffn(zr, p));
        }
        Tensor zr = add(z_in, attention(affine_layernorm(z_in, p + "ln1"), p, attention_out));
        return add(zr, ffn(affine_layernorm(zr, p + "ln2"), p));
    }

    diff::Tensor forward(const diff::Tensor &positions, const diff::Tensor &signals) override {
        using namespace diff;
        Tensor z = input_embed(positions, signals);
        for (int l = 0; l < cfg_.P_blocks; ++l)
            z = sab_forward(z, l);
        return linear(z, store_.get("head.W"), store_.get("head.b"));
    }

  private:
    diff::Tensor attention(const diff::Tensor &z, const std::string &prefix,
                           std::vector<diff::Tensor> *attention_out) {
        using namespace diff;
        const std::size_t d = static_cast<std::size_t>(cfg_.d_hid);
        const std::size_t heads = static_cast<std::size_t>(cfg_.n_heads);
        const std::size_t d_head = d / heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));

        Tensor q = linear(z, store_.get(prefix + "q.W"), store_.get(prefix + "q.b"));
        Tensor k = linear(z, store_.get(prefix + "k.W"), store_.get(prefix + "k.b"));
        Tensor v = linear(z, store_.get(prefix + "v.W"), store_.get(prefix + "v.b"));

        std::vector<Tensor> head_outputs;
        head_outputs.reserve(heads);
        for (std::size_t h = 0; h < heads; ++h) {
            Tensor qh = slice(q, 2, h * d_head, d_head);
            Tensor kh = slice(k, 2, h * d_head, d_head);
            Tensor vh = slice(v, 2, h * d_head, d_head);
            Tensor scores = mul_scalar(matmul(qh, transpose(kh)), scale); // B x N x N
            Tensor weights = softmax(scores);
            if (attention_out)
                attention_out->push_back(weights);
            head_outputs.push_back(matmul(weights, vh));
        }
        Tensor merged = concat(head_outputs, 2);
        return linear(merged, store_.get(prefix + "o.W"), store_.get(prefix + "o.b"));
    }

    diff::Tensor ffn(const diff::Tensor &z, const std::string &prefix) {
        using namespace diff;
        Tensor u = linear(z, store_.get(prefix + "ffn1.W"), store_.get(prefix + "ffn1.b"));
        return linear(gelu(u), store_.get(prefix + "ffn2.W"), store_.get(prefix + "ffn2.b"));
    }

    diff::Tensor affine_layernorm(const diff::Tensor &x, const std::string &prefix) {
        using namespace diff;
        Tensor normed = layernorm(x);
        Tensor g = broadcast_to(store_.get(prefix + ".gamma"), x.shape());
        Tensor b = broadcast_to(store_.get(prefix + ".beta"), x.shape());
        return add(mul(normed, g), b);
    }

    void build_params(std::uint64_t seed) {
        using namespace diff;
        Rng rng(seed);
        const auto d = static_cast<std::size_t>(cfg_.d_hid);
        const auto token_w = static_cast<std::size_t>(2 * cfg_.T + 1);
        const auto ffn_w = static_cast<std::size_t>(cfg_.ffn_mult) * d;

        auto linear_pair = [&](const std::string &name, std::size_t in, std::size_t out) {
            store_.create(name + ".W", {in, out}, init_linear_weight(rng, in, in * out));
            store_.create(name + ".b", {out}, init_zeros(out));
        };
        auto ln_pair = [&](const std::string &name) {
            store_.create(name + ".gamma", {d}, init_ones(d));
            store_.create(name + ".beta", {d}, init_zeros(d));
        };

        linear_pair("embed.l1", token_w, d);
        linear_pair("embed.l2", d, d);
        for (int l = 0; l < cfg_.P_blocks; ++l) {
            const std::string p = "block" + std::to_string(l) + ".";
            ln_pair(p + "ln1");
            if (!cfg_.strict_paper_block)
                ln_pair(p + "ln2");
            linear_pair(p + "q", d, d);
            linear_pair(p + "k", d, d);
            linear_pair(p + "v", d, d);
            linear_pair(p + "o", d, d);
            linear_pair(p + "ffn1", d, ffn_w);
            linear_pair(p + "ffn2", ffn_w, d);
        }
        linear_pair("head", d, static_cast<std::size_t>(cfg_.d_out));
    }

    PAformerConfig cfg_;
    diff::ParamStore store_;
};

} // namespace passim

#endif // PASSIM_PAFORMER_HPP
