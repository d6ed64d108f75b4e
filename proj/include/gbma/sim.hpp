#pragma once

/**
 * Iterative descent driven by over-the-air gradient aggregation.
 *
 * One iteration: every node scales its local gradient by the slot's energy
 * and transmits simultaneously; the receiver's matched-filter output is
 *
 *   v_k = (1/N) sum_n h_{n,k} g_n(theta_k) + w_k,
 *   w_k ~ Normal(0, sigma_w^2 / (N^2 E_N) I_d),
 *
 * and the edge updates theta_{k+1} = theta_k - beta v_k.  Two baselines
 * share the trace format: exact centralized descent, and per-node
 * orthogonal channels with receiver-side fading correction (the aggregate
 * then sees noise sigma_w^2/(E N) per dimension).
 */

#include <cstdint>
#include <vector>

#include "gbma/channel.hpp"
#include "gbma/model.hpp"

namespace gbma {

// ========================== run configuration ===========================

struct Projection {
    bool enabled = false;   // defaults off: iterates are unconstrained
    ParamVec center;
    double radius = 0.0;
};

struct DivergenceGuard {
    bool enabled = true;
    double norm_limit = 1e8;     // |theta_k| beyond this trips the guard
    double excess_limit = 1e12;  // excess risk beyond this trips the guard
};

struct RunConfig {
    double beta = 0.0;     // stepsize, >= 0 (0 makes a frozen control run)
    int k_max = 1;         // transmission slots; trace holds k_max+1 records
    ParamVec theta0;
    std::uint64_t seed = 0;
    DivergenceGuard guard;
    Projection projection;
    bool record_theta = false;  // additionally store every iterate
};

// Optimum the excess risk is measured against.
struct Reference {
    ParamVec theta_star;
    double f_star = 0.0;
};

// ============================== traces ==================================

struct IterationRecord {
    int k = 0;
    double excess_risk = 0.0;   // F(theta_k) - F(theta_star)
    double r_sq = 0.0;          // |theta_k - theta_star|^2
    double grad_norm_sq = 0.0;  // |grad F(theta_k)|^2
    double v_norm_sq = 0.0;     // |v_k|^2 (0 on the terminal record)
    double energy_spent = 0.0;  // sum_n E_N |g_n(theta_k)|^2 for this slot
};

enum class RunStatus { kCompleted, kDiverged };

struct RunTrace {
    std::vector<IterationRecord> records;  // k = 0 .. k_max (or stop point)
    RunStatus status = RunStatus::kCompleted;
    int diverged_at = -1;                  // k where the guard tripped
    std::vector<ParamVec> thetas;          // filled when record_theta is set
};

// ========================= core update pieces ===========================

// Receiver-side aggregate for one slot: gain-weighted gradient mean plus
// isotropic noise of standard deviation noise_sigma per dimension.  A zero
// noise_sigma consumes no draws from `noise_rng`.
ParamVec aggregate_v(const LossEnsemble& ens, const Eigen::Ref<const ParamVec>& theta,
                     const ChannelDraw& draw, double noise_sigma,
                     StreamRng& noise_rng);

// theta - beta * v, optionally clamped back onto the projection ball.
// Throws DivergenceError when v is not finite.
ParamVec step(const Eigen::Ref<const ParamVec>& theta,
              const Eigen::Ref<const ParamVec>& v, double beta,
              const Projection& projection = {});

// ========================= stepsize designers ===========================

/**
 * Largest safe stepsize (scaled by `safety` in (0, 1]) under the
 * strongly convex contraction condition
 *   beta < min{ 2 / (mu_h (mu + L)),
 *               2 mu_h mu L N / (sigma_h^2 Lbar^2 (1 + 2 delta) (mu + L)) }.
 * Requires certified constants with mu > 0.  With safety == 1 the returned
 * stepsize sits exactly on the open boundary and the rate evaluator will
 * reject it; use safety < 1 for anything that also needs bound curves.
 */
double design_stepsize_strongly_convex(const ObjectiveConstants& c,
                                       const FadingMoments& m, int n_nodes,
                                       double safety);

// Convex-case designer: safety/L under equal gains, safety/(L mu_h) under
// fading.  Requires certified constants.
double design_stepsize_convex(const ObjectiveConstants& c, const FadingMoments& m,
                              bool equal_gains, double safety);

// ============================= run loops ================================

RunTrace run_gbma(const LossEnsemble& ens, const FadingModel& fading,
                  const NoiseModel& noise, const EnergySchedule& schedule,
                  const RunConfig& cfg, const Reference& ref);

// Exact gradient descent on F; no channel, no energy accounting.
RunTrace run_centralized(const LossEnsemble& ens, const RunConfig& cfg,
                         const Reference& ref);

// Orthogonal per-node channels at fixed per-node energy; fading corrected
// at the receiver, so the averaged update sees Normal(0, sigma_w^2/(E N))
// noise per dimension.
RunTrace run_fdm(const LossEnsemble& ens, const NoiseModel& noise,
                 double per_node_energy, const RunConfig& cfg,
                 const Reference& ref);

}  // namespace gbma
