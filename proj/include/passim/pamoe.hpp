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

#ifndef PASSIM_PAMOE_HPP
#define PASSIM_PAMOE_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "diff/param_store.hpp"
#include "diff/tensor.hpp"
#include "estimator.hpp"
#include "rng.hpp"

namespace passim {

inline constexpr const char *kPamoeModelId = "pamoe-v1";

/// Mixture-of-experts channel estimator: dynamic padding to N_max, Fourier
/// positional embedding, gated fusion of position and pilot features, a bank
/// of softmax-gated MLP-Mixer experts, and a cropped linear head.
struct PAMoEConfig {
    int N_max = 32;
    int F = 16;      // Fourier frequency components
    int d_embed = 64;
    int d_hid = 64;
    int E = 4;       // experts
    int d_out = 2;
    int T = 4;       // pilot slots (signal width 2T)

    void validate() const {
        if (d_out != 2)
            throw ConfigError("PAMoEConfig: d_out must be 2");
        if (E < 1 || F < 1 || N_max < 1)
            throw ConfigError("PAMoEConfig: E, F and N_max must be >= 1");
        if (d_embed != d_hid)
            throw ConfigError("PAMoEConfig: d_embed must equal d_hid (positional features are added "
                              "to the fused hidden tensor)");
        if (T < 1)
            throw ConfigError("PAMoEConfig: T must be >= 1");
    }

    std::string to_text() const {
        std::ostringstream out;
        out << "model = " << kPamoeModelId << "\n"
            << "N_max = " << N_max << "\nF = " << F << "\nd_embed = " << d_embed << "\nd_hid = " << d_hid
            << "\nE = " << E << "\nd_out = " << d_out << "\nT = " << T << "\n";
        return out.str();
    }

    static PAMoEConfig from_text(const std::string &text) {
        const auto kv = detail::parse_kv_text(text);
        PAMoEConfig c;
        c.N_max = detail::kv_int(kv, "N_max", c.N_max);
        c.F = detail::kv_int(kv, "F", c.F);
        c.d_embed = detail::kv_int(kv, "d_embed", c.d_embed);
        c.d_hid = detail::kv_int(kv, "d_hid", c.d_hid);
        c.E = detail::kv_int(kv, "E", c.E);
        c.d_out = detail::kv_int(kv, "d_out", c.d_out);
        c.T = detail::kv_int(kv, "T", c.T);
        c.validate();
        return c;
    }
};

class PAMoE : public NeuralEstimator {
  public:
    explicit PAMoE(const PAMoEConfig &cfg, std::uint64_t init_seed = 1) : cfg_(cfg) {
        cfg_.validate();
        build_params(init_seed);
    }

    std::string model_id() const override { return kPamoeModelId; }
    const PAMoEConfig &config() const { return cfg_; }
    diff::ParamStore &store() override { return store_; }
    const diff::ParamStore &store() const override { return store_; }
    std::string model_config_text() const override { return cfg_.to_text(); }
    int max_antennas() const override { return cfg_.N_max; }
    int pilot_slots() const override { return cfg_.T; }

    /// Pads the antenna axis to N_max with the learnable rows phi1/phi2.
    std::pair<diff::Tensor, diff::Tensor> dynamic_pad(const diff::Tensor &positions,
                                                      const diff::Tensor &signals) {
        using namespace diff;
        check_inputs(positions, signals);
        const std::size_t b = positions.dim(0);
        const std::size_t n = positions.dim(1);
        const auto n_max = static_cast<std::size_t>(cfg_.N_max);
        if (n > n_max)
            throw CapacityError("pamoe: N=" + std::to_string(n) + " exceeds the architectural ceiling N_max=" +
                                std::to_string(n_max));
        if (n == n_max)
            return {positions, signals};
        const std::size_t n_pad = n_max - n;
        Tensor p_fill = broadcast_to(store_.get("pad.phi1"), {b, n_pad, 1});
        Tensor s_fill = broadcast_to(store_.get("pad.phi2"), {b, n_pad, static_cast<std::size_t>(2 * cfg_.T)});
        return {concat({positions, p_fill}, 1), concat({signals, s_fill}, 1)};
    }

    /// Fourier positional embedding: theta = outer(P', [2^f pi]), features
    /// [sin theta, cos theta], projected to d_embed.
    diff::Tensor fourier_embed(const diff::Tensor &padded_positions) {
        using namespace diff;
        Tensor theta = matmul(padded_positions, freqs_);
        Tensor feats = concat({diff::sin(theta), diff::cos(theta)}, 2);
        return linear(feats, store_.get("pos.W"), store_.get("pos.b"));
    }

    diff::Tensor signal_embed(const diff::Tensor &padded_signals) {
        using namespace diff;
        Tensor z = linear(padded_signals, store_.get("sig.l1.W"), store_.get("sig.l1.b"));
        return linear(gelu(z), store_.get("sig.l2.W"), store_.get("sig.l2.b"));
    }

    /// Position-driven gate applied to the signal features:
    /// G = sigmoid(W_g Z_pos + b_g), Z_fused = G .* Z_sig + Z_pos.
    diff::Tensor gated_fusion(const diff::Tensor &z_pos, const diff::Tensor &z_sig) {
        using namespace diff;
        if (z_pos.shape() != z_sig.shape())
            throw ShapeError("gated_fusion: shapes " + shape_str(z_pos.shape()) + " and " +
                             shape_str(z_sig.shape()) + " do not match");
        Tensor gate = sigmoid(linear(z_pos, store_.get("gate.W"), store_.get("gate.b")));
        return add(mul(gate, z_sig), z_pos);
    }

    /// Softmax-gated dense mixture: Z_MoE = sum_e alpha_e * Mixer_e(Z_fused).
    diff::Tensor moe_layer(const diff::Tensor &z_fused, diff::Tensor *gate_weights_out = nullptr) {
        using namespace diff;
        const std::size_t b = z_fused.dim(0);
        const auto n_max = static_cast<std::size_t>(cfg_.N_max);
        const auto d = static_cast<std::size_t>(cfg_.d_hid);

        Tensor z_pool = mean_axis(z_fused, 1); // B x d
        Tensor alpha = softmax(linear(z_pool, store_.get("alpha.W"), store_.get("alpha.b"))); // B x E
        if (gate_weights_out)
            *gate_weights_out = alpha;

        Tensor acc;
        for (int e = 0; e < cfg_.E; ++e) {
            Tensor z_e = expert_forward(z_fused, e);
            Tensor a_e = broadcast_to(reshape(slice(alpha, 1, static_cast<std::size_t>(e), 1), {b, 1, 1}),
                                      {b, n_max, d});
            Tensor term = mul(a_e, z_e);
            acc = e == 0 ? term : add(acc, term);
        }
        return acc;
    }

    diff::Tensor forward(const diff::Tensor &positions, const diff::Tensor &signals) override {
        using namespace diff;
        const std::size_t n = positions.dim(1);
        auto [p_pad, s_pad] = dynamic_pad(positions, signals);
        Tensor z_pos = fourier_embed(p_pad);
        Tensor z_sig = signal_embed(s_pad);
        Tensor z_fused = gated_fusion(z_pos, z_sig);
        Tensor z_moe = moe_layer(z_fused);
        Tensor z_cat = concat({z_pos, z_moe}, 2);
        Tensor full = linear(z_cat, store_.get("head.W"), store_.get("head.b"));
        return slice(full, 1, 0, n); // crop to the deployed antennas
    }

  private:
    void check_inputs(const diff::Tensor &positions, const diff::Tensor &signals) const {
        if (positions.ndim() != 3 || positions.dim(2) != 1)
            throw ShapeError("pamoe: positions must be (B,N,1), got " + diff::shape_str(positions.shape()));
        if (signals.ndim() != 3 || signals.dim(2) != static_cast<std::size_t>(2 * cfg_.T))
            throw ShapeError("pamoe: signals must be (B,N," + std::to_string(2 * cfg_.T) + "), got " +
                             diff::shape_str(signals.shape()));
        if (positions.dim(0) != signals.dim(0) || positions.dim(1) != signals.dim(1))
            throw ShapeError("pamoe: positions " + diff::shape_str(positions.shape()) + " and signals " +
                             diff::shape_str(signals.shape()) + " disagree on batch/antenna axes");
    }

    /// MLP-Mixer expert: token-mixing MLP over the antenna axis, then
    /// channel-mixing MLP over features, each pre-normalized with residual.
    diff::Tensor expert_forward(const diff::Tensor &x, int e) {
        using namespace diff;
        const std::string p = "expert" + std::to_string(e) + ".";
        Tensor u = affine_layernorm(x, p + "ln1");
        u = transpose(u); // B x d x N_max
        u = linear(u, store_.get(p + "tok1.W"), store_.get(p + "tok1.b"));
        u = gelu(u);
        u = linear(u, store_.get(p + "tok2.W"), store_.get(p + "tok2.b"));
        Tensor y = add(x, transpose(u));

        Tensor v = affine_layernorm(y, p + "ln2");
        v = linear(v, store_.get(p + "ch1.W"), store_.get(p + "ch1.b"));
        v = gelu(v);
        v = linear(v, store_.get(p + "ch2.W"), store_.get(p + "ch2.b"));
        return add(y, v);
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
        const auto n_max = static_cast<std::size_t>(cfg_.N_max);
        const auto d = static_cast<std::size_t>(cfg_.d_hid);
        const auto f = static_cast<std::size_t>(cfg_.F);
        const auto sig_w = static_cast<std::size_t>(2 * cfg_.T);

        auto linear_pair = [&](const std::string &name, std::size_t in, std::size_t out) {
            store_.create(name + ".W", {in, out}, init_linear_weight(rng, in, in * out));
            store_.create(name + ".b", {out}, init_zeros(out));
        };
        auto ln_pair = [&](const std::string &name) {
            store_.create(name + ".gamma", {d}, init_ones(d));
            store_.create(name + ".beta", {d}, init_zeros(d));
        };

        store_.create("pad.phi1", {1}, init_embedding(rng, 1));
        store_.create("pad.phi2", {sig_w}, init_embedding(rng, sig_w));
        linear_pair("pos", 2 * f, d);
        linear_pair("sig.l1", sig_w, d);
        linear_pair("sig.l2", d, d);
        linear_pair("gate", d, d);
        for (int e = 0; e < cfg_.E; ++e) {
            const std::string p = "expert" + std::to_string(e) + ".";
            ln_pair(p + "ln1");
            linear_pair(p + "tok1", n_max, 2 * n_max);
            linear_pair(p + "tok2", 2 * n_max, n_max);
            ln_pair(p + "ln2");
            linear_pair(p + "ch1", d, 2 * d);
            linear_pair(p + "ch2", 2 * d, d);
        }
        linear_pair("alpha", d, static_cast<std::size_t>(cfg_.E));
        linear_pair("head", 2 * d, static_cast<std::size_t>(cfg_.d_out));

        // Exponentially increasing frequency bases 2^f * pi as a 1 x F constant.
        std::vector<double> fr(f);
        for (std::size_t i = 0; i < f; ++i)
            fr[i] = std::pow(2.0, static_cast<double>(i)) * std::numbers::pi;
        freqs_ = Tensor({1, f}, std::move(fr));
    }

    PAMoEConfig cfg_;
    diff::ParamStore store_;
    diff::Tensor freqs_;
};

} // namespace passim

#endif // PASSIM_PAMOE_HPP
