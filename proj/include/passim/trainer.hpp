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

#ifndef PASSIM_TRAINER_HPP
#define PASSIM_TRAINER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "diff/param_store.hpp"
#include "diff/tensor.hpp"
#include "estimator.hpp"
#include "flops.hpp"
#include "pilots.hpp"
#include "rng.hpp"

namespace passim {

// Trainer-level sub-streams of the training seed.
inline constexpr std::uint64_t kStreamSplit = 100;
inline constexpr std::uint64_t kStreamShuffleBase = 101; // + epoch
inline constexpr std::uint64_t kStreamModelInit = 102;

struct TrainConfig {
    int batch = 256;
    int epochs = 50;
    double lr = 1e-3;
    double split = 0.9; // training fraction; remainder is validation
    std::uint64_t seed = 1;
    double snr_lo_db = -10.0, snr_hi_db = 20.0; // recorded for provenance
    std::string model = "pamoe-v1";

    void validate() const {
        if (batch < 1)
            throw ConfigError("TrainConfig: batch must be >= 1");
        if (epochs < 0)
            throw ConfigError("TrainConfig: epochs must be >= 0");
        if (!(split > 0.0 && split < 1.0))
            throw ConfigError("TrainConfig: split must lie strictly between 0 and 1");
        if (!(lr >= 0.0))
            throw ConfigError("TrainConfig: lr must be >= 0");
    }

    std::string to_text() const {
        std::ostringstream out;
        out.precision(17);
        out << "batch = " << batch << "\nepochs = " << epochs << "\nlr = " << lr << "\nsplit = " << split
            << "\nseed = " << seed << "\nsnr_lo_db = " << snr_lo_db << "\nsnr_hi_db = " << snr_hi_db
            << "\nmodel = " << model << "\noptimizer = adam(beta1=0.9, beta2=0.999, eps=1e-8)\n"
            << "init = fan_in_uniform/zero_bias/0.02_normal_embeddings\n";
        return out.str();
    }
};

/// One evaluation result row; `failed` marks cells that could not run (e.g.
/// a capacity overflow), which is an outcome, not a crash.
struct MetricsRow {
    std::string estimator;
    int N = 0;
    int T = 0;
    double snr_db = 0.0;
    double nmse = std::numeric_limits<double>::quiet_NaN();
    double nmse_db = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t flops = 0;
    std::uint64_t params = 0;
    std::int64_t seed = 0;
    double wallclock_s = 0.0;
    bool failed = false;
    std::string fail_reason;
};

// --- loss and metric ----------------------------------------------------------

/// l1 training loss: per-sample sum of absolute errors, averaged over the
/// batch. Gradient is sign(pred - label)/B away from ties.
inline diff::Tensor l1_loss(const diff::Tensor &pred, const diff::Tensor &label) {
    using namespace diff;
    if (pred.shape() != label.shape())
        throw ShapeError("l1_loss: shapes " + shape_str(pred.shape()) + " and " + shape_str(label.shape()) +
                         " do not match");
    const auto batch = static_cast<double>(pred.ndim() >= 1 ? pred.dim(0) : 1);
    return mul_scalar(sum_all(abs_val(sub(pred, label))), 1.0 / batch);
}

struct NmseResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples = 0;
    std::size_t excluded = 0; // zero-norm labels skipped (counted warning)
};

/// NMSE = mean over samples of ||pred - label||_F^2 / ||label||_F^2.
inline NmseResult nmse(const std::vector<double> &pred, const std::vector<double> &label,
                       std::size_t per_sample) {
    if (pred.size() != label.size() || per_sample == 0 || pred.size() % per_sample != 0)
        throw ShapeError("nmse: prediction/label sizes " + std::to_string(pred.size()) + "/" +
                         std::to_string(label.size()) + " are not batches of " + std::to_string(per_sample));
    NmseResult r;
    double acc = 0.0;
    const std::size_t n = pred.size() / per_sample;
    for (std::size_t s = 0; s < n; ++s) {
        double err = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < per_sample; ++i) {
            const double d = pred[s * per_sample + i] - label[s * per_sample + i];
            err += d * d;
            ref += label[s * per_sample + i] * label[s * per_sample + i];
        }
        if (ref == 0.0) {
            ++r.excluded;
            continue;
        }
        acc += err / ref;
        ++r.samples;
    }
    r.value = r.samples ? acc / static_cast<double>(r.samples) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

inline NmseResult nmse(const diff::Tensor &pred, const diff::Tensor &label) {
    if (pred.shape() != label.shape())
        throw ShapeError("nmse: shapes " + diff::shape_str(pred.shape()) + " and " +
                         diff::shape_str(label.shape()) + " do not match");
    const std::size_t batch = pred.ndim() >= 1 ? pred.dim(0) : 1;
    return nmse(pred.value(), label.value(), pred.numel() / batch);
}

inline double nmse_to_db(double v) { return 10.0 * std::log10(v); }

// --- training loop --------------------------------------------------------------

struct TrainLogRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_nmse = std::numeric_limits<double>::quiet_NaN();
    double wallclock_s = 0.0;
};

/// Deterministic log line; the wallclock field is informational and excluded
/// from byte-determinism comparisons.
inline std::string train_log_line(const TrainLogRow &row) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch=" << row.epoch << " train_loss=" << row.train_loss << " val_nmse=" << row.val_nmse
        << " wallclock_s=" << std::fixed << row.wallclock_s;
    return out.str();
}

struct TrainResult {
    std::vector<TrainLogRow> log;
    int best_epoch = -1;
    double best_val_nmse = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t steps = 0;
};

/// Evaluates a model's NMSE over records in fixed-size batches (forward only).
inline NmseResult evaluate_model(NeuralEstimator &model, const std::vector<DatasetRecord> &records,
                                 const std::vector<std::size_t> &indices, int batch_size = 256) {
    NmseResult total;
    double acc = 0.0;
    for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t stop = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                       indices.begin() + static_cast<std::ptrdiff_t>(stop));
        BatchTensors batch = pack_batch(records, chunk);
        diff::Tensor pred = model.forward(batch.positions, batch.signals);
        const NmseResult r = nmse(pred, batch.labels);
        acc += r.value * static_cast<double>(r.samples);
        total.samples += r.samples;
        total.excluded += r.excluded;
    }
    total.value =
        total.samples ? acc / static_cast<double>(total.samples) : std::numeric_limits<double>::quiet_NaN();
    return total;
}

inline NmseResult evaluate_model(NeuralEstimator &model, const std::vector<DatasetRecord> &records,
                                 int batch_size = 256) {
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    return evaluate_model(model, records, idx, batch_size);
}

/// Mini-batch Adam training with a deterministic shuffle, per-epoch
/// validation, and best-validation parameter retention. A pure function of
/// (dataset bytes, TrainConfig).
inline TrainResult train(NeuralEstimator &model, const Dataset &dataset, const TrainConfig &tc) {
    tc.validate();
    if (dataset.records.empty())
        throw ConfigError("train: dataset is empty");
    const int data_n = dataset.records.front().N;
    const int data_t = dataset.records.front().T;
    if (model.max_antennas() > 0 && data_n > model.max_antennas())
        throw CapacityError("train: dataset N=" + std::to_string(data_n) + " exceeds the model ceiling N_max=" +
                            std::to_string(model.max_antennas()));
    if (data_t != model.pilot_slots())
        throw ShapeError("train: dataset T=" + std::to_string(data_t) + " does not match the model's T=" +
                         std::to_string(model.pilot_slots()));

    // Deterministic split: shuffled indices, head = training, tail = validation.
    std::vector<std::size_t> idx(dataset.records.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng split_rng(derive_seed(tc.seed, kStreamSplit));
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[split_rng.below(i)]);
    const auto n_train =
        std::max<std::size_t>(1, static_cast<std::size_t>(tc.split * static_cast<double>(idx.size())));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());

    TrainResult result;
    std::vector<double> best_params;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(tc.seed, kStreamShuffleBase + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = train_idx.size(); i > 1; --i)
            std::swap(train_idx[i - 1], train_idx[shuffle_rng.below(i)]);

        double loss_acc = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(tc.batch)) {
            const std::size_t stop = std::min(train_idx.size(), start + static_cast<std::size_t>(tc.batch));
            std::vector<std::size_t> chunk(train_idx.begin() + static_cast<std::ptrdiff_t>(start),
                                           train_idx.begin() + static_cast<std::ptrdiff_t>(stop));
            BatchTensors batch = pack_batch(dataset.records, chunk);
            diff::Tensor pred = model.forward(batch.positions, batch.signals);
            diff::Tensor loss = l1_loss(pred, batch.labels);
            model.store().zero_grads();
            diff::backward(loss);
            model.store().adam_step(tc.lr);
            ++result.steps;
            loss_acc += loss.item() * static_cast<double>(chunk.size());
        }

        TrainLogRow row;
        row.epoch = epoch;
        row.train_loss = loss_acc / static_cast<double>(train_idx.size());
        if (!val_idx.empty())
            row.val_nmse = evaluate_model(model, dataset.records, val_idx, tc.batch).value;
        row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(row);

        if (!val_idx.empty() && (result.best_epoch < 0 || row.val_nmse < result.best_val_nmse)) {
            result.best_epoch = epoch;
            result.best_val_nmse = row.val_nmse;
            best_params = model.store().snapshot_values();
        }
    }

    if (!best_params.empty())
        model.store().restore_values(best_params);
    return result;
}

// --- zero-shot sweep over antenna counts ---------------------------------------

/// Evaluates a trained model on freshly generated test sets across antenna
/// counts. Cells a model cannot serve (N above its ceiling) are recorded as
/// failed rows rather than raised.
inline std::vector<MetricsRow> zero_shot_eval(NeuralEstimator &model, const SystemConfig &base_cfg,
                                              const std::vector<int> &n_list, double snr_db,
                                              const std::vector<std::uint64_t> &seeds,
                                              std::uint64_t records_per_cell = 2000) {
    std::vector<MetricsRow> rows;
    for (int n : n_list) {
        for (std::uint64_t seed : seeds) {
            MetricsRow row;
            row.estimator = model.model_id();
            row.N = n;
            row.T = model.pilot_slots();
            row.snr_db = snr_db;
            row.seed = static_cast<std::int64_t>(seed);
            row.params = count_params_by_id(model.model_id(), model.model_config_text());
            const auto t0 = std::chrono::steady_clock::now();
            try {
                row.flops = count_flops_by_id(model.model_id(), model.model_config_text(), n);
                if (model.max_antennas() > 0 && n > model.max_antennas())
                    throw CapacityError("zero_shot_eval: N=" + std::to_string(n) +
                                        " exceeds the architectural ceiling N_max=" +
                                        std::to_string(model.max_antennas()));
                SystemConfig cfg = base_cfg;
                cfg.N = n;
                cfg.T = model.pilot_slots();
                cfg.snr_db = snr_db;
                const Dataset ds = build_dataset(cfg, records_per_cell, seed, SnrSpec::fixed(snr_db));
                const NmseResult r = evaluate_model(model, ds.records);
                row.nmse = r.value;
                row.nmse_db = nmse_to_db(r.value);
            } catch (const CapacityError &e) {
                row.failed = true;
                row.fail_reason = e.what();
            }
            row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace passim

#endif // PASSIM_TRAINER_HPP
