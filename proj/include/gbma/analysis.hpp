#pragma once

/**
 * Monte Carlo aggregation and the statistical estimators used to compare
 * simulated curves against the closed-form bounds.
 *
 * Aggregation is deterministic: replication r always runs under the
 * sub-seed derived from (base_seed, r), traces are reduced in ascending
 * replication order with compensated sums, and diverged replications are
 * excluded from every aggregate but reported in the counts.
 */

#include <cstdint>
#include <functional>
#include <vector>

#include "gbma/channel.hpp"
#include "gbma/model.hpp"
#include "gbma/sim.hpp"

namespace gbma {

// ========================== Monte Carlo runs ============================

// Builds the trace for one replication given its derived seed.
using ReplicationFn = std::function<RunTrace(std::uint64_t seed)>;

struct CurveStats {
    int reps_requested = 0;
    int completed = 0;
    int diverged = 0;
    // Per-iteration aggregates over completed replications, k = 0..k_max.
    std::vector<double> excess_mean;
    std::vector<double> excess_se;   // NaN when completed < 2
    std::vector<double> excess_min;
    std::vector<double> excess_max;
    std::vector<double> r_sq_mean;
    std::vector<double> grad_sq_mean;
    std::vector<double> v_sq_mean;
    std::vector<double> energy_mean;      // per-slot transmit energy
    std::vector<double> energy_cum_mean;  // spent strictly before slot k
};

struct MonteCarloResult {
    CurveStats stats;
    std::vector<RunTrace> traces;  // every replication, completed or not
};

MonteCarloResult monte_carlo(const ReplicationFn& fn, int reps,
                             std::uint64_t base_seed);

// ========================= moment validators ============================

/**
 * Monte Carlo check of the aggregate's mean at a frozen parameter point:
 * E[v] = mu_h * grad F(theta).  Each coordinate gets a z-score of the MC
 * mean against that prediction; `pass` requires max |z| <= z_limit.
 */
struct MeanAggregateReport {
    Eigen::VectorXd mc_mean;
    Eigen::VectorXd se;        // per-coordinate standard error
    Eigen::VectorXd expected;  // mu_h * grad F(theta)
    Eigen::VectorXd z;
    double max_abs_z = 0.0;
    double z_limit = 4.0;
    int draws = 0;
    bool pass = false;
};

MeanAggregateReport validate_mean_v(const LossEnsemble& ens, const FadingModel& fading,
                                    const NoiseModel& noise, const EnergySchedule& schedule,
                                    const Eigen::Ref<const ParamVec>& theta, int draws,
                                    std::uint64_t seed, double z_limit = 4.0);

/**
 * Monte Carlo check of the aggregate's second moment at a frozen point:
 *   E|v|^2 = mu_h^2 |grad F|^2 + (sigma_h^2/N^2) sum_n |grad f_n|^2
 *            + d sigma_w^2 / (E_N N^2).
 * `pass` requires the MC mean within rel_tol of the closed form.
 */
struct SecondMomentReport {
    double mc_mean = 0.0;
    double se = 0.0;
    double closed_form = 0.0;
    double rel_err = 0.0;
    double rel_tol = 0.03;
    int draws = 0;
    bool pass = false;
};

SecondMomentReport validate_second_moment_v(const LossEnsemble& ens,
                                            const FadingModel& fading,
                                            const NoiseModel& noise,
                                            const EnergySchedule& schedule,
                                            const Eigen::Ref<const ParamVec>& theta,
                                            int draws, std::uint64_t seed,
                                            double rel_tol = 0.03);

// ========================== curve estimators ============================

struct PlateauEstimate {
    double value = 0.0;    // mean excess risk over the tail window
    bool converged = true; // false when the tail is still dropping steeply
    int tail_start = 0;
};

// Mean of the final `tail_fraction` of the curve (default 0.2).  Flags
// not-converged when the tail still drops by more than 2x end to end.
PlateauEstimate plateau_estimator(const std::vector<double>& excess_mean,
                                  double tail_fraction = 0.2);

// Least-squares slope of log(excess) over k in [k_lo, k_hi].  Constant
// windows return 0; windows that overlap a converged plateau (below 10x
// its level) or contain non-positive values are rejected.
double slope_estimator(const std::vector<double>& excess_mean, int k_lo, int k_hi);

// ========================== energy accounting ===========================

struct EnergyToTarget {
    double target = 0.0;
    bool reached = false;          // mean curve crossed the target
    int k_hit = -1;                // first k with mean excess <= target
    double energy_at_hit = 0.0;    // mean cumulative energy at k_hit
    double floor_estimate = 0.0;   // plateau level when not reached
    std::vector<double> per_rep_energy;  // completed reps that reached it
    std::vector<int> per_rep_k;
    int per_rep_reached = 0;
};

// Cumulative transmit energy needed to first push the excess risk to or
// below `target`, on the mean curve and per completed replication.
EnergyToTarget energy_to_target(const MonteCarloResult& mc, double target);

}  // namespace gbma
