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

#ifndef PASSIM_DIFF_PARAM_STORE_HPP
#define PASSIM_DIFF_PARAM_STORE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "../common.hpp"
#include "../dataset_io.hpp" // byte reader/writer helpers
#include "../rng.hpp"
#include "tensor.hpp"

namespace passim::diff {

struct AdamMoments {
    std::vector<double> m, v;
};

/// Named collection of trainable tensors plus Adam state. Iteration order is
/// the name order, which makes every operation over the store deterministic.
class ParamStore {
  public:
    Tensor &create(const std::string &name, const Shape &shape, std::vector<double> values) {
        if (params_.count(name))
            throw ConfigError("ParamStore: parameter '" + name + "' already exists");
        auto [it, ok] = params_.emplace(name, Tensor(shape, std::move(values), true));
        (void)ok;
        return it->second;
    }

    Tensor &get(const std::string &name) {
        auto it = params_.find(name);
        if (it == params_.end())
            throw ConfigError("ParamStore: no parameter named '" + name + "'");
        return it->second;
    }

    const Tensor &get(const std::string &name) const {
        auto it = params_.find(name);
        if (it == params_.end())
            throw ConfigError("ParamStore: no parameter named '" + name + "'");
        return it->second;
    }

    bool contains(const std::string &name) const { return params_.count(name) > 0; }
    std::size_t size() const { return params_.size(); }
    std::uint64_t step_count() const { return step_count_; }

    std::size_t total_parameters() const {
        std::size_t n = 0;
        for (const auto &[name, t] : params_)
            n += t.numel();
        return n;
    }

    std::map<std::string, Tensor> &entries() { return params_; }
    const std::map<std::string, Tensor> &entries() const { return params_; }

    void zero_grads() {
        for (auto &[name, t] : params_)
            t.node()->grad.assign(t.numel(), 0.0);
    }

    /// One Adam update with bias correction. All parameters must carry grads.
    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
        std::string missing;
        for (const auto &[name, t] : params_)
            if (!t.has_grad())
                missing += (missing.empty() ? "" : ", ") + name;
        if (!missing.empty())
            throw EstimationError("adam_step: missing gradients for: " + missing);

        const auto t_step = static_cast<double>(step_count_ + 1);
        const double bc1 = 1.0 - std::pow(beta1, t_step);
        const double bc2 = 1.0 - std::pow(beta2, t_step);
        for (auto &[name, t] : params_) {
            auto &mom = moments_[name];
            if (mom.m.empty()) {
                mom.m.assign(t.numel(), 0.0);
                mom.v.assign(t.numel(), 0.0);
            }
            auto &val = t.mutable_value();
            const auto &g = t.grad();
            for (std::size_t i = 0; i < val.size(); ++i) {
                mom.m[i] = beta1 * mom.m[i] + (1.0 - beta1) * g[i];
                mom.v[i] = beta2 * mom.v[i] + (1.0 - beta2) * g[i] * g[i];
                val[i] -= lr * (mom.m[i] / bc1) / (std::sqrt(mom.v[i] / bc2) + eps);
            }
        }
        ++step_count_;
    }

    /// Flat snapshot of all parameter values in name order.
    std::vector<double> snapshot_values() const {
        std::vector<double> out;
        out.reserve(total_parameters());
        for (const auto &[name, t] : params_)
            out.insert(out.end(), t.value().begin(), t.value().end());
        return out;
    }

    void restore_values(const std::vector<double> &flat) {
        std::size_t pos = 0;
        for (auto &[name, t] : params_) {
            if (pos + t.numel() > flat.size())
                throw ShapeError("ParamStore::restore_values: snapshot too short");
            std::copy_n(flat.data() + pos, t.numel(), t.mutable_value().data());
            pos += t.numel();
        }
        if (pos != flat.size())
            throw ShapeError("ParamStore::restore_values: snapshot size mismatch");
    }

    const std::map<std::string, AdamMoments> &moments() const { return moments_; }
    std::map<std::string, AdamMoments> &moments() { return moments_; }
    void set_step_count(std::uint64_t s) { step_count_ = s; }

  private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, AdamMoments> moments_;
    std::uint64_t step_count_ = 0;
};

// --- initialization ----------------------------------------------------------

/// Uniform fan-in scaling for linear weights.
inline std::vector<double> init_linear_weight(Rng &rng, std::size_t fan_in, std::size_t count) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> v(count);
    for (auto &x : v)
        x = rng.uniform(-bound, bound);
    return v;
}

/// Standard normal scaled by 0.02 for embeddings.
inline std::vector<double> init_embedding(Rng &rng, std::size_t count) {
    std::vector<double> v(count);
    for (auto &x : v)
        x = 0.02 * rng.normal();
    return v;
}

inline std::vector<double> init_zeros(std::size_t count) { return std::vector<double>(count, 0.0); }
inline std::vector<double> init_ones(std::size_t count) { return std::vector<double>(count, 1.0); }

// --- checkpoint container ----------------------------------------------------
//
// Self-describing container: magic "PASSCK", version, model id, the system
// config text, training hyperparameter text, model config text, step count,
// then named arrays with shapes, values and optimizer moments.

inline constexpr char kCheckpointMagic[6] = {'P', 'A', 'S', 'S', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
    std::string model_id;
    std::string system_config_text;
    std::string train_config_text;
    std::string model_config_text;
    std::uint64_t step_count = 0;

    struct Entry {
        Shape shape;
        std::vector<double> values;
        bool has_moments = false;
        AdamMoments moments;
    };
    std::map<std::string, Entry> entries;
};

inline Checkpoint make_checkpoint(const ParamStore &store, const std::string &model_id,
                                  const std::string &system_config_text,
                                  const std::string &train_config_text,
                                  const std::string &model_config_text) {
    Checkpoint ck;
    ck.model_id = model_id;
    ck.system_config_text = system_config_text;
    ck.train_config_text = train_config_text;
    ck.model_config_text = model_config_text;
    ck.step_count = store.step_count();
    for (const auto &[name, t] : store.entries()) {
        Checkpoint::Entry e;
        e.shape = t.shape();
        e.values = t.value();
        auto it = store.moments().find(name);
        if (it != store.moments().end() && !it->second.m.empty()) {
            e.has_moments = true;
            e.moments = it->second;
        }
        ck.entries.emplace(name, std::move(e));
    }
    return ck;
}

/// Copies checkpoint arrays into an existing store (built by a model with
/// matching configuration). Throws on the first shape mismatch, naming the
/// offending tensor.
inline void load_into_store(const Checkpoint &ck, ParamStore &store) {
    for (auto &[name, t] : store.entries()) {
        auto it = ck.entries.find(name);
        if (it == ck.entries.end())
            throw ShapeError("checkpoint: missing tensor '" + name + "'");
        if (it->second.shape != t.shape())
            throw ShapeError("checkpoint: tensor '" + name + "' has shape " + shape_str(it->second.shape) +
                             " but the model expects " + shape_str(t.shape()));
        t.mutable_value() = it->second.values;
        if (it->second.has_moments)
            store.moments()[name] = it->second.moments;
    }
    for (const auto &[name, e] : ck.entries)
        if (!store.contains(name))
            throw ShapeError("checkpoint: unexpected tensor '" + name + "' not present in the model");
    store.set_step_count(ck.step_count);
}

inline std::string serialize_checkpoint(const Checkpoint &ck) {
    using passim::detail::put_f64;
    using passim::detail::put_u32;
    using passim::detail::put_u64;
    std::string buf;
    buf.append(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_u32(buf, kCheckpointFormatVersion);
    auto put_blob = [&buf](const std::string &s) {
        put_u32(buf, static_cast<std::uint32_t>(s.size()));
        buf.append(s);
    };
    put_blob(ck.model_id);
    put_blob(ck.system_config_text);
    put_blob(ck.train_config_text);
    put_blob(ck.model_config_text);
    put_u64(buf, ck.step_count);
    put_u32(buf, static_cast<std::uint32_t>(ck.entries.size()));
    for (const auto &[name, e] : ck.entries) {
        put_blob(name);
        put_u32(buf, static_cast<std::uint32_t>(e.shape.size()));
        for (std::size_t d : e.shape)
            put_u64(buf, d);
        for (double x : e.values)
            put_f64(buf, x);
        buf.push_back(e.has_moments ? 1 : 0);
        if (e.has_moments) {
            for (double x : e.moments.m)
                put_f64(buf, x);
            for (double x : e.moments.v)
                put_f64(buf, x);
        }
    }
    return buf;
}

inline void save_checkpoint(const Checkpoint &ck, const std::string &path) {
    passim::detail::write_file(path, serialize_checkpoint(ck));
}

inline Checkpoint parse_checkpoint(const std::string &bytes, const std::string &what = "checkpoint") {
    passim::detail::Reader r(bytes.data(), bytes.size(), what);
    r.expect_magic(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointFormatVersion)
        throw IoError(IoError::Code::version_mismatch,
                      what + ": checkpoint version " + std::to_string(version) + " is not supported");
    auto blob = [&r]() { return r.bytes(r.u32()); };
    Checkpoint ck;
    ck.model_id = blob();
    ck.system_config_text = blob();
    ck.train_config_text = blob();
    ck.model_config_text = blob();
    ck.step_count = r.u64();
    const std::uint32_t n_entries = r.u32();
    for (std::uint32_t i = 0; i < n_entries; ++i) {
        const std::string name = blob();
        Checkpoint::Entry e;
        const std::uint32_t ndim = r.u32();
        e.shape.resize(ndim);
        for (auto &d : e.shape)
            d = r.u64();
        const std::size_t count = shape_numel(e.shape);
        e.values.resize(count);
        for (auto &x : e.values)
            x = r.f64();
        e.has_moments = r.bytes(1)[0] != 0;
        if (e.has_moments) {
            e.moments.m.resize(count);
            for (auto &x : e.moments.m)
                x = r.f64();
            e.moments.v.resize(count);
            for (auto &x : e.moments.v)
                x = r.f64();
        }
        ck.entries.emplace(name, std::move(e));
    }
    if (!r.done())
        throw IoError(IoError::Code::malformed, what + ": trailing bytes after the last tensor");
    return ck;
}

inline Checkpoint load_checkpoint(const std::string &path) {
    return parse_checkpoint(passim::detail::read_file(path), path);
}

// --- finite-difference gradient checking --------------------------------------

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> per_param;
    double max_rel_err = 0.0;

    bool passed(double tol = 1e-4) const { return max_rel_err < tol; }
};

/// Central finite differences against the analytic gradients of a scalar-loss
/// forward function. The forward closure must rebuild its graph on each call.
inline GradCheckReport gradcheck(const std::function<Tensor()> &forward, ParamStore &store,
                                 double fd_step = 1e-6) {
    store.zero_grads();
    Tensor loss = forward();
    backward(loss);

    std::map<std::string, std::vector<double>> analytic;
    for (const auto &[name, t] : store.entries())
        analytic[name] = t.grad();

    GradCheckReport report;
    for (auto &[name, t] : store.entries()) {
        GradCheckEntry entry{name, 0.0};
        auto &val = t.mutable_value();
        for (std::size_t i = 0; i < val.size(); ++i) {
            const double saved = val[i];
            val[i] = saved + fd_step;
            const double f_plus = forward().item();
            val[i] = saved - fd_step;
            const double f_minus = forward().item();
            val[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * fd_step);
            const double a = analytic[name][i];
            const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.per_param.push_back(std::move(entry));
    }
    return report;
}

} // namespace passim::diff

#endif // PASSIM_DIFF_PARAM_STORE_HPP
