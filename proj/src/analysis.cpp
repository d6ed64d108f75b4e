#include "gbma/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gbma/compensated.hpp"

namespace gbma {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Mean and standard error of one record field across completed traces.
template <typename Getter>
void reduce_field(const std::vector<const RunTrace*>& done, std::size_t k,
                  Getter get, double* mean_out, double* se_out,
                  double* min_out = nullptr, double* max_out = nullptr) {
    const std::size_t m = done.size();
    CompensatedScalar acc;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const RunTrace* t : done) {
        const double x = get(t->records[k]);
        acc.add(x);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double mean = acc.value() / static_cast<double>(m);
    *mean_out = mean;
    if (min_out) *min_out = lo;
    if (max_out) *max_out = hi;
    if (se_out) {
        if (m < 2) {
            *se_out = kNan;
        } else {
            CompensatedScalar sq;
            for (const RunTrace* t : done) {
                const double dx = get(t->records[k]) - mean;
                sq.add(dx * dx);
            }
            const double var = sq.value() / static_cast<double>(m - 1);
            *se_out = std::sqrt(std::max(0.0, var) / static_cast<double>(m));
        }
    }
}

}  // namespace

// ========================== Monte Carlo runs ============================

MonteCarloResult monte_carlo(const ReplicationFn& fn, int reps,
                             std::uint64_t base_seed) {
    if (reps < 1) {
        throw ConfigError("monte carlo needs at least one replication");
    }
    MonteCarloResult out;
    out.traces.reserve(reps);
    for (int r = 0; r < reps; ++r) {
        out.traces.push_back(fn(replication_seed(base_seed, r)));
    }

    CurveStats& s = out.stats;
    s.reps_requested = reps;
    std::vector<const RunTrace*> done;
    for (const RunTrace& t : out.traces) {
        if (t.status == RunStatus::kCompleted) {
            done.push_back(&t);
        } else {
            ++s.diverged;
        }
    }
    s.completed = static_cast<int>(done.size());
    if (done.empty()) {
        return out;  // counts only; no curves to aggregate
    }

    const std::size_t len = done.front()->records.size();
    for (const RunTrace* t : done) {
        if (t->records.size() != len) {
            throw ShapeError("completed replications disagree on trace length");
        }
    }

    s.excess_mean.resize(len);
    s.excess_se.resize(len);
    s.excess_min.resize(len);
    s.excess_max.resize(len);
    s.r_sq_mean.resize(len);
    s.grad_sq_mean.resize(len);
    s.v_sq_mean.resize(len);
    s.energy_mean.resize(len);
    s.energy_cum_mean.resize(len);

    CompensatedScalar cum;
    for (std::size_t k = 0; k < len; ++k) {
        reduce_field(done, k, [](const IterationRecord& r) { return r.excess_risk; },
                     &s.excess_mean[k], &s.excess_se[k], &s.excess_min[k],
                     &s.excess_max[k]);
        reduce_field(done, k, [](const IterationRecord& r) { return r.r_sq; },
                     &s.r_sq_mean[k], nullptr);
        reduce_field(done, k, [](const IterationRecord& r) { return r.grad_norm_sq; },
                     &s.grad_sq_mean[k], nullptr);
        reduce_field(done, k, [](const IterationRecord& r) { return r.v_norm_sq; },
                     &s.v_sq_mean[k], nullptr);
        reduce_field(done, k, [](const IterationRecord& r) { return r.energy_spent; },
                     &s.energy_mean[k], nullptr);
        s.energy_cum_mean[k] = cum.value();  // spent strictly before slot k
        cum.add(s.energy_mean[k]);
    }
    return out;
}

// ========================= moment validators ============================

MeanAggregateReport validate_mean_v(const LossEnsemble& ens, const FadingModel& fading,
                                    const NoiseModel& noise, const EnergySchedule& schedule,
                                    const Eigen::Ref<const ParamVec>& theta, int draws,
                                    std::uint64_t seed, double z_limit) {
    if (draws < 2) {
        throw ConfigError("mean validation needs at least two draws");
    }
    const int n = ens.node_count();
    const int d = ens.dim();
    const double sigma = effective_noise_sigma(noise, schedule, n);
    const FadingMoments m = fading.moments();

    CompensatedVector sum(d);
    CompensatedVector sum_sq(d);
    ParamVec v(d);
    for (int j = 0; j < draws; ++j) {
        const ChannelDraw draw = draw_gains(fading, seed, j, n);
        StreamRng noise_rng(seed, kStreamNoise, static_cast<std::uint64_t>(j));
        v = aggregate_v(ens, theta, draw, sigma, noise_rng);
        sum.add(v);
        sum_sq.add(v.cwiseProduct(v));
    }

    MeanAggregateReport report;
    report.draws = draws;
    report.z_limit = z_limit;
    const double md = static_cast<double>(draws);
    report.mc_mean = sum.value() / md;
    Eigen::VectorXd var = (sum_sq.value() - md * report.mc_mean.cwiseProduct(report.mc_mean)) / (md - 1.0);
    var = var.cwiseMax(0.0);
    report.se = (var / md).cwiseSqrt();
    report.expected = m.mu_h * global_value_and_grad(ens, theta).grad;

    report.z.resize(d);
    for (int i = 0; i < d; ++i) {
        const double diff = report.mc_mean[i] - report.expected[i];
        if (report.se[i] > 0.0) {
            report.z[i] = diff / report.se[i];
        } else {
            report.z[i] = diff == 0.0 ? 0.0
                                      : std::numeric_limits<double>::infinity();
        }
    }
    report.max_abs_z = report.z.cwiseAbs().maxCoeff();
    report.pass = report.max_abs_z <= z_limit;
    return report;
}

SecondMomentReport validate_second_moment_v(const LossEnsemble& ens,
                                            const FadingModel& fading,
                                            const NoiseModel& noise,
                                            const EnergySchedule& schedule,
                                            const Eigen::Ref<const ParamVec>& theta,
                                            int draws, std::uint64_t seed,
                                            double rel_tol) {
    if (draws < 2) {
        throw ConfigError("second-moment validation needs at least two draws");
    }
    const int n = ens.node_count();
    const int d = ens.dim();
    const double sigma = effective_noise_sigma(noise, schedule, n);
    const FadingMoments m = fading.moments();
    const double e_n = schedule.energy_at(n);

    CompensatedScalar sum;
    CompensatedScalar sum_sq;
    for (int j = 0; j < draws; ++j) {
        const ChannelDraw draw = draw_gains(fading, seed, j, n);
        StreamRng noise_rng(seed, kStreamNoise, static_cast<std::uint64_t>(j));
        const double x = aggregate_v(ens, theta, draw, sigma, noise_rng).squaredNorm();
        sum.add(x);
        sum_sq.add(x * x);
    }

    SecondMomentReport report;
    report.draws = draws;
    report.rel_tol = rel_tol;
    const double md = static_cast<double>(draws);
    report.mc_mean = sum.value() / md;
    const double var =
        std::max(0.0, (sum_sq.value() - md * report.mc_mean * report.mc_mean) / (md - 1.0));
    report.se = std::sqrt(var / md);

    const NodeSweep sweep = sweep_nodes(ens, theta, nullptr);
    const double nd = static_cast<double>(n);
    report.closed_form = m.mu_h * m.mu_h * sweep.grad_mean.squaredNorm() +
                         m.sigma_h_sq / (nd * nd) * sweep.sum_sq_grad +
                         static_cast<double>(d) * noise.sigma_w_sq / (e_n * nd * nd);
    const double scale = std::max(std::abs(report.closed_form),
                                  std::numeric_limits<double>::min());
    report.rel_err = std::abs(report.mc_mean - report.closed_form) / scale;
    report.pass = report.rel_err <= rel_tol;
    return report;
}

// ========================== curve estimators ============================

PlateauEstimate plateau_estimator(const std::vector<double>& excess_mean,
                                  double tail_fraction) {
    if (excess_mean.size() < 20) {
        throw WindowError("plateau estimate needs a curve of length >= 20");
    }
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
        throw ConfigError("tail fraction must lie in (0, 1]");
    }
    const std::size_t len = excess_mean.size();
    const std::size_t tail =
        std::max<std::size_t>(2, static_cast<std::size_t>(tail_fraction * len));
    const std::size_t start = len - tail;

    CompensatedScalar acc;
    for (std::size_t k = start; k < len; ++k) acc.add(excess_mean[k]);

    PlateauEstimate est;
    est.tail_start = static_cast<int>(start);
    est.value = acc.value() / static_cast<double>(tail);
    // Still dropping by more than 2x across the tail => not settled yet.
    const double first = excess_mean[start];
    const double last = excess_mean[len - 1];
    est.converged = !(first > 0.0 && last > 0.0 && last < 0.5 * first);
    return est;
}

double slope_estimator(const std::vector<double>& excess_mean, int k_lo, int k_hi) {
    if (k_lo < 0 || k_hi <= k_lo ||
        static_cast<std::size_t>(k_hi) >= excess_mean.size()) {
        throw WindowError("slope window must satisfy 0 <= k_lo < k_hi < curve length");
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
        if (!std::isfinite(excess_mean[k])) {
            throw WindowError("slope window contains non-finite excess risk");
        }
        lo = std::min(lo, excess_mean[k]);
        hi = std::max(hi, excess_mean[k]);
    }
    // A flat window has slope zero by definition (covers frozen runs).
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
        return 0.0;
    }
    if (lo <= 0.0) {
        throw WindowError("slope window contains non-positive excess risk");
    }
    if (excess_mean.size() >= 20) {
        const PlateauEstimate plateau = plateau_estimator(excess_mean);
        if (plateau.converged && plateau.value > 0.0 && lo < 10.0 * plateau.value) {
            throw WindowError("slope window reaches within 10x of the plateau; "
                              "shrink the window");
        }
    }

    const double m = static_cast<double>(k_hi - k_lo + 1);
    double k_bar = 0.0, y_bar = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        k_bar += k;
        y_bar += std::log(excess_mean[k]);
    }
    k_bar /= m;
    y_bar /= m;
    double num = 0.0, den = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double dk = k - k_bar;
        num += dk * (std::log(excess_mean[k]) - y_bar);
        den += dk * dk;
    }
    return num / den;
}

// ========================== energy accounting ===========================

EnergyToTarget energy_to_target(const MonteCarloResult& mc, double target) {
    if (!(target > 0.0)) {
        throw ConfigError("energy accounting needs a positive target");
    }
    const CurveStats& s = mc.stats;
    if (s.excess_mean.empty()) {
        throw WindowError("energy accounting needs at least one completed replication");
    }

    EnergyToTarget out;
    out.target = target;
    for (std::size_t k = 0; k < s.excess_mean.size(); ++k) {
        if (s.excess_mean[k] <= target) {
            out.reached = true;
            out.k_hit = static_cast<int>(k);
            out.energy_at_hit = s.energy_cum_mean[k];
            break;
        }
    }
    if (!out.reached && s.excess_mean.size() >= 20) {
        out.floor_estimate = plateau_estimator(s.excess_mean).value;
    }

    for (const RunTrace& t : mc.traces) {
        if (t.status != RunStatus::kCompleted) continue;
        CompensatedScalar cum;
        bool hit = false;
        for (const IterationRecord& rec : t.records) {
            if (rec.excess_risk <= target) {
                out.per_rep_energy.push_back(cum.value());
                out.per_rep_k.push_back(rec.k);
                ++out.per_rep_reached;
                hit = true;
                break;
            }
            cum.add(rec.energy_spent);
        }
        if (!hit) {
            out.per_rep_energy.push_back(kNan);
            out.per_rep_k.push_back(-1);
        }
    }
    return out;
}

}  // namespace gbma
