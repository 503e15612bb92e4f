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

#ifndef PASSIM_CLASSICAL_HPP
#define PASSIM_CLASSICAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "channel.hpp"
#include "common.hpp"
#include "pilots.hpp"
#include "rng.hpp"

namespace passim {

/// Antenna switching schedule: slot t activates the antennas whose mask bit
/// is set. The identity schedule (one antenna per slot) is the default
/// benchmark configuration.
struct SwitchingSchedule {
    int n_antennas = 0;
    std::vector<std::vector<bool>> slots; // T_sw rows of N-bit masks

    static SwitchingSchedule identity(int n) {
        SwitchingSchedule s;
        s.n_antennas = n;
        s.slots.assign(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
        for (int t = 0; t < n; ++t)
            s.slots[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)] = true;
        return s;
    }

    static SwitchingSchedule all_on(int n, int t_sw) {
        SwitchingSchedule s;
        s.n_antennas = n;
        s.slots.assign(static_cast<std::size_t>(t_sw), std::vector<bool>(static_cast<std::size_t>(n), true));
        return s;
    }

    std::size_t n_slots() const { return slots.size(); }

    void validate() const {
        if (slots.empty())
            throw ScheduleError("SwitchingSchedule: need at least one slot");
        for (std::size_t t = 0; t < slots.size(); ++t) {
            if (static_cast<int>(slots[t].size()) != n_antennas)
                throw ScheduleError("SwitchingSchedule: slot " + std::to_string(t) + " mask width " +
                                    std::to_string(slots[t].size()) + " does not match N=" +
                                    std::to_string(n_antennas));
            bool any = false;
            for (bool b : slots[t])
                any = any || b;
            if (!any)
                throw ScheduleError("SwitchingSchedule: slot " + std::to_string(t) + " activates no antenna");
        }
    }
};

/// Channel covariance used by the LMMSE estimator.
struct CovarianceModel {
    enum class Source { empirical, identity };
    Eigen::MatrixXcd R_h;
    Source source = Source::identity;

    static CovarianceModel identity(int n, double scale = 1.0) {
        CovarianceModel m;
        m.R_h = scale * Eigen::MatrixXcd::Identity(n, n);
        m.source = Source::identity;
        return m;
    }
};

namespace detail {

inline Eigen::VectorXcd to_eigen(const ComplexVector &v) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

inline ComplexVector from_eigen(const Eigen::VectorXcd &v) {
    ComplexVector out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[static_cast<std::size_t>(i)] = v(i);
    return out;
}

/// Stacked measurement matrix: row t carries g_n on the active columns.
inline Eigen::MatrixXcd system_matrix(const SwitchingSchedule &sched, const ComplexVector &g) {
    const auto t_sw = static_cast<Eigen::Index>(sched.n_slots());
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(t_sw, n);
    for (Eigen::Index t = 0; t < t_sw; ++t)
        for (Eigen::Index c = 0; c < n; ++c)
            if (sched.slots[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)])
                a(t, c) = g[static_cast<std::size_t>(c)];
    return a;
}

} // namespace detail

/// Per-slot switched measurements y_t = sum_{n active in t} g_n h_n + noise,
/// noise CN(0, sigma_n^2) with sigma_n^2 set by cfg.snr_db.
inline ComplexVector switched_measure(const ChannelRealization &real, const SwitchingSchedule &sched,
                                      const SystemConfig &cfg, std::uint64_t rng_seed) {
    sched.validate();
    if (sched.n_antennas != static_cast<int>(real.g.size()))
        throw ScheduleError("switched_measure: schedule is for N=" + std::to_string(sched.n_antennas) +
                            " but the channel has N=" + std::to_string(real.g.size()));
    const double noise_var = noise_variance_from_snr_db(cfg.snr_db);
    Rng rng(rng_seed);
    ComplexVector y(sched.n_slots());
    for (std::size_t t = 0; t < sched.n_slots(); ++t) {
        cplx acc{0.0, 0.0};
        for (std::size_t n = 0; n < real.g.size(); ++n)
            if (sched.slots[t][n])
                acc += real.g[n] * real.h[n];
        y[t] = acc + rng.cnormal(noise_var);
    }
    return y;
}

/// Least-squares estimate from switched measurements, solved by column-pivoted
/// QR. On the identity schedule this reduces to h_n = y_n / g_n.
inline ComplexVector ls_estimate(const ComplexVector &y, const SwitchingSchedule &sched,
                                 const ComplexVector &g) {
    sched.validate();
    if (y.size() != sched.n_slots())
        throw EstimationError("ls_estimate: measurement length " + std::to_string(y.size()) +
                              " does not match schedule with " + std::to_string(sched.n_slots()) + " slots");

    // Identity schedule: diagonal system, guard each divisor.
    bool is_identity = sched.n_slots() == g.size();
    if (is_identity) {
        for (std::size_t t = 0; t < sched.n_slots() && is_identity; ++t)
            for (std::size_t n = 0; n < g.size() && is_identity; ++n)
                if (sched.slots[t][n] != (t == n))
                    is_identity = false;
    }
    if (is_identity) {
        ComplexVector h(g.size());
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (std::abs(g[n]) == 0.0)
                throw SingularityError("ls_estimate: g[" + std::to_string(n) + "] is zero on the identity schedule");
            h[n] = y[n] / g[n];
        }
        return h;
    }

    const Eigen::MatrixXcd a = detail::system_matrix(sched, g);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    const auto n = a.cols();
    if (qr.rank() < n) {
        std::string cols;
        const auto &perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < n; ++i)
            cols += (cols.empty() ? "" : ", ") + std::to_string(perm(i));
        throw EstimationError("ls_estimate: system matrix is rank-deficient (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(n) +
                              "); deficient columns: " + cols);
    }
    return detail::from_eigen(qr.solve(detail::to_eigen(y)));
}

/// LMMSE estimate: h = R A^H (A R A^H + sigma_n^2 I)^{-1} y.
inline ComplexVector lmmse_estimate(const ComplexVector &y, const SwitchingSchedule &sched,
                                    const ComplexVector &g, const CovarianceModel &cov,
                                    double noise_var) {
    sched.validate();
    if (noise_var < 0.0)
        throw EstimationError("lmmse_estimate: negative noise variance");
    if (cov.R_h.rows() != static_cast<Eigen::Index>(g.size()) || cov.R_h.cols() != cov.R_h.rows())
        throw EstimationError("lmmse_estimate: covariance is " + std::to_string(cov.R_h.rows()) + "x" +
                              std::to_string(cov.R_h.cols()) + " but N=" + std::to_string(g.size()));

    const Eigen::MatrixXcd a = detail::system_matrix(sched, g);
    const Eigen::MatrixXcd ra = cov.R_h * a.adjoint();
    Eigen::MatrixXcd inner = a * ra;
    inner += noise_var * Eigen::MatrixXcd::Identity(inner.rows(), inner.cols());
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(inner);
    if (!lu.isInvertible())
        throw EstimationError("lmmse_estimate: inner matrix A R A^H + sigma^2 I is singular");
    return detail::from_eigen(ra * lu.solve(detail::to_eigen(y)));
}

/// Non-centered sample covariance of complex channel labels, Hermitian
/// symmetrized and eigenvalue-floored at zero.
inline CovarianceModel empirical_covariance(const std::vector<ComplexVector> &labels) {
    if (labels.empty())
        throw EstimationError("empirical_covariance: no samples");
    const auto n = static_cast<Eigen::Index>(labels.front().size());
    if (static_cast<Eigen::Index>(labels.size()) < n)
        throw EstimationError("empirical_covariance: need at least N=" + std::to_string(n) +
                              " samples, got " + std::to_string(labels.size()));
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
    for (const auto &h : labels) {
        if (static_cast<Eigen::Index>(h.size()) != n)
            throw EstimationError("empirical_covariance: inconsistent label lengths");
        const Eigen::VectorXcd v = detail::to_eigen(h);
        r.noalias() += v * v.adjoint();
    }
    r /= static_cast<double>(labels.size());
    r = (r + r.adjoint().eval()) / 2.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r);
    Eigen::VectorXd ev = eig.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        ev(i) = std::max(ev(i), 0.0);
    CovarianceModel cov;
    cov.R_h = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
    cov.R_h = (cov.R_h + cov.R_h.adjoint().eval()) / 2.0;
    cov.source = CovarianceModel::Source::empirical;
    return cov;
}

/// Covariance from a dataset's stored labels.
inline CovarianceModel empirical_covariance(const Dataset &ds) {
    std::vector<ComplexVector> labels;
    labels.reserve(ds.records.size());
    for (const auto &rec : ds.records)
        labels.push_back(from_real_label(rec.H_bar));
    return empirical_covariance(labels);
}

} // namespace passim

#endif // PASSIM_CLASSICAL_HPP
