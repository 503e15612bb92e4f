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

#ifndef PASSIM_SWEEP_HPP
#define PASSIM_SWEEP_HPP

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "classical.hpp"
#include "common.hpp"
#include "estimator.hpp"
#include "model_registry.hpp"
#include "trainer.hpp"

namespace passim {

// Sub-stream tag for baseline switched-measurement noise hung off a record seed.
inline constexpr std::uint64_t kStreamBaselineNoise = 20;

inline constexpr const char *kMetricsCsvHeader = "estimator,N,T,snr_db,nmse,nmse_db,flops,params,seed,wallclock_s";
inline constexpr const char *kWorkerEnvVar = "PASSIM_WORKERS";

inline int worker_count() {
    const char *env = std::getenv(kWorkerEnvVar);
    if (!env)
        return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
}

inline std::string metrics_row_csv(const MetricsRow &row) {
    std::ostringstream out;
    out.precision(12);
    out << row.estimator << ',' << row.N << ',' << row.T << ',' << row.snr_db << ',' << row.nmse << ','
        << row.nmse_db << ',' << row.flops << ',' << row.params << ',' << row.seed << ',' << row.wallclock_s;
    return out.str();
}

/// Fixed-header CSV with provenance comment lines (config hash, overrides).
inline std::string metrics_csv(const std::vector<MetricsRow> &rows,
                               const std::vector<std::string> &comments = {}) {
    std::string out;
    for (const auto &c : comments)
        out += "# " + c + "\n";
    out += std::string(kMetricsCsvHeader) + "\n";
    for (const auto &row : rows) {
        out += metrics_row_csv(row) + "\n";
        if (row.failed)
            out += "# failed_cell estimator=" + row.estimator + " N=" + std::to_string(row.N) +
                   " snr_db=" + std::to_string(row.snr_db) + " reason=" + row.fail_reason + "\n";
    }
    return out;
}

// --- classical baseline evaluation over dataset records -------------------------

/// Per-record identity-schedule measurement reconstructed from stored fields;
/// the switching noise stream is a documented sub-stream of the record seed.
struct BaselineRecordView {
    ComplexVector g;
    ComplexVector h;
    ComplexVector y;
    SwitchingSchedule sched;
    double noise_var = 0.0;
};

inline BaselineRecordView baseline_measure(const DatasetRecord &rec, const SystemConfig &cfg) {
    BaselineRecordView view;
    PinchingLayout layout;
    layout.pa_x = rec.pa_x;
    layout.grid_indices.assign(rec.pa_x.size(), 0);

    ChannelRealization real;
    real.layout = layout;
    real.g = inwaveguide_channel(layout, cfg);
    real.h = from_real_label(rec.H_bar);

    SystemConfig rec_cfg = cfg;
    rec_cfg.snr_db = rec.snr_db;
    view.sched = SwitchingSchedule::identity(rec.N);
    view.y = switched_measure(real, view.sched, rec_cfg, derive_seed(rec.seed, kStreamBaselineNoise));
    view.g = std::move(real.g);
    view.h = std::move(real.h);
    view.noise_var = noise_variance_from_snr_db(rec.snr_db);
    return view;
}

inline double record_ratio(const ComplexVector &estimate, const ComplexVector &truth) {
    double err = 0.0, ref = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n) {
        err += std::norm(estimate[n] - truth[n]);
        ref += std::norm(truth[n]);
    }
    return err / ref;
}

/// Mean per-record NMSE of the switching LS baseline over a dataset.
inline NmseResult baseline_ls_nmse(const Dataset &ds) {
    NmseResult r;
    double acc = 0.0;
    for (const auto &rec : ds.records) {
        const BaselineRecordView view = baseline_measure(rec, ds.meta.cfg);
        double ref = 0.0;
        for (const auto &hn : view.h)
            ref += std::norm(hn);
        if (ref == 0.0) {
            ++r.excluded;
            continue;
        }
        acc += record_ratio(ls_estimate(view.y, view.sched, view.g), view.h);
        ++r.samples;
    }
    r.value = r.samples ? acc / static_cast<double>(r.samples) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

/// Mean per-record NMSE of the switching LMMSE baseline. The covariance
/// defaults to the empirical (oracle-knowledge) estimate from this dataset's
/// own labels.
inline NmseResult baseline_lmmse_nmse(const Dataset &ds, const CovarianceModel *cov_in = nullptr) {
    const CovarianceModel cov = cov_in ? *cov_in : empirical_covariance(ds);
    NmseResult r;
    double acc = 0.0;
    for (const auto &rec : ds.records) {
        const BaselineRecordView view = baseline_measure(rec, ds.meta.cfg);
        double ref = 0.0;
        for (const auto &hn : view.h)
            ref += std::norm(hn);
        if (ref == 0.0) {
            ++r.excluded;
            continue;
        }
        acc += record_ratio(lmmse_estimate(view.y, view.sched, view.g, cov, view.noise_var), view.h);
        ++r.samples;
    }
    r.value = r.samples ? acc / static_cast<double>(r.samples) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

// --- sweep engine ----------------------------------------------------------------

/// One estimator participating in a sweep: a classical baseline ("ls",
/// "lmmse") or a trained neural model.
struct SweepEstimator {
    std::string id;                          // "ls", "lmmse", or a model id
    std::shared_ptr<NeuralEstimator> model;  // set for neural estimators
    bool use_identity_cov = false;           // lmmse only

    bool is_model() const { return model != nullptr; }
};

struct SweepRequest {
    enum class Kind { over_snr, over_n };
    Kind kind = Kind::over_snr;
    SystemConfig cfg;                                        // N/T defaults; N overridden per cell in over_n
    std::vector<double> snr_grid = {-10, -5, 0, 5, 10, 15, 20};
    std::vector<int> n_grid = {8, 12, 16, 20, 24, 28, 32};
    double fixed_snr_db = 0.0;                               // over_n sweeps
    int n_seeds = 1;
    std::uint64_t base_seed = 1;
    std::uint64_t records_per_cell = 2000;
    std::vector<SweepEstimator> estimators;
};

namespace detail {

struct SweepCell {
    int n = 0;
    double snr_db = 0.0;
    std::uint64_t dataset_seed = 0;
    std::int64_t seed_index = 0;
};

inline MetricsRow run_cell(const SweepEstimator &est, const SweepRequest &req, const SweepCell &cell) {
    MetricsRow row;
    row.estimator = est.id;
    row.N = cell.n;
    row.snr_db = cell.snr_db;
    row.seed = cell.seed_index;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        SystemConfig cfg = req.cfg;
        cfg.N = cell.n;
        cfg.snr_db = cell.snr_db;
        if (est.is_model()) {
            row.T = est.model->pilot_slots();
            cfg.T = est.model->pilot_slots();
            row.params = count_params_by_id(est.model->model_id(), est.model->model_config_text());
            row.flops = count_flops_by_id(est.model->model_id(), est.model->model_config_text(), cell.n);
            if (est.model->max_antennas() > 0 && cell.n > est.model->max_antennas())
                throw CapacityError("sweep: N=" + std::to_string(cell.n) + " exceeds " + est.id +
                                    "'s ceiling N_max=" + std::to_string(est.model->max_antennas()));
            const Dataset ds = build_dataset(cfg, req.records_per_cell, cell.dataset_seed,
                                             SnrSpec::fixed(cell.snr_db));
            const NmseResult r = evaluate_model(*est.model, ds.records);
            row.nmse = r.value;
        } else {
            row.T = cell.n; // identity switching schedule: one slot per antenna
            const Dataset ds = build_dataset(cfg, req.records_per_cell, cell.dataset_seed,
                                             SnrSpec::fixed(cell.snr_db));
            CovarianceModel identity_cov = CovarianceModel::identity(cell.n);
            const NmseResult r = est.id == "ls"
                                     ? baseline_ls_nmse(ds)
                                     : baseline_lmmse_nmse(ds, est.use_identity_cov ? &identity_cov : nullptr);
            row.nmse = r.value;
        }
        row.nmse_db = nmse_to_db(row.nmse);
    } catch (const CapacityError &e) {
        row.failed = true;
        row.fail_reason = e.what();
    }
    row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

} // namespace detail

/// Grid evaluation over SNR (fixed N) or antenna count (fixed SNR). One row
/// per (estimator, cell, seed); per-(estimator, cell) mean rows appended with
/// seed = -1. Failed cells are recorded and the sweep continues. Cells run on
/// a bounded worker pool (PASSIM_WORKERS, default 1); results are collected
/// into fixed slots so the output is independent of scheduling.
inline std::vector<MetricsRow> run_sweep(const SweepRequest &req) {
    if (req.estimators.empty())
        throw ConfigError("run_sweep: no estimators requested");
    req.cfg.validate();

    // Dataset seeds share channels across the SNR grid (the seed does not mix
    // in the SNR), which keeps SNR sweeps comparable cell-to-cell.
    std::vector<detail::SweepCell> cells;
    if (req.kind == SweepRequest::Kind::over_snr) {
        for (double snr : req.snr_grid)
            for (int s = 0; s < req.n_seeds; ++s)
                cells.push_back({req.cfg.N, snr, derive_seed(req.base_seed, static_cast<std::uint64_t>(s)),
                                 s});
    } else {
        for (int n : req.n_grid)
            for (int s = 0; s < req.n_seeds; ++s)
                cells.push_back({n, req.fixed_snr_db,
                                 derive_seed(derive_seed(req.base_seed, static_cast<std::uint64_t>(n)),
                                             static_cast<std::uint64_t>(s)),
                                 s});
    }

    struct Task {
        std::size_t est_index;
        detail::SweepCell cell;
    };
    std::vector<Task> tasks;
    for (std::size_t e = 0; e < req.estimators.size(); ++e)
        for (const auto &cell : cells)
            tasks.push_back({e, cell});

    std::vector<MetricsRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            rows[i] = detail::run_cell(req.estimators[tasks[i].est_index], req, tasks[i].cell);
        }
    };
    const int workers = worker_count();
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto &t : pool)
            t.join();
    }

    // Aggregate means over seeds (seed = -1 marks aggregate rows).
    std::vector<MetricsRow> out = rows;
    std::map<std::pair<std::string, std::pair<int, double>>, std::vector<const MetricsRow *>> groups;
    for (const auto &row : rows)
        groups[{row.estimator, {row.N, row.snr_db}}].push_back(&row);
    for (const auto &[key, members] : groups) {
        MetricsRow agg = *members.front();
        agg.seed = -1;
        double acc = 0.0;
        std::size_t ok = 0;
        double wall = 0.0;
        for (const auto *m : members) {
            wall += m->wallclock_s;
            if (!m->failed) {
                acc += m->nmse;
                ++ok;
            }
        }
        agg.wallclock_s = wall;
        if (ok > 0) {
            agg.failed = false;
            agg.fail_reason.clear();
            agg.nmse = acc / static_cast<double>(ok);
            agg.nmse_db = nmse_to_db(agg.nmse);
        } else {
            agg.failed = true;
            agg.nmse = std::numeric_limits<double>::quiet_NaN();
            agg.nmse_db = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(std::move(agg));
    }
    return out;
}

} // namespace passim

#endif // PASSIM_SWEEP_HPP
