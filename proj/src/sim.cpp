#include "gbma/sim.hpp"

#include <cmath>
#include <limits>

namespace gbma {

namespace {

void add_noise(ParamVec& v, double noise_sigma, StreamRng& rng) {
    if (noise_sigma == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] += noise_sigma * rng.gaussian();
    }
}

void validate_run_config(const LossEnsemble& ens, const RunConfig& cfg) {
    if (cfg.theta0.size() != ens.dim()) {
        throw ShapeError("theta0 dimension does not match the ensemble");
    }
    if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) {
        throw ConfigError("stepsize must be finite and >= 0");
    }
    if (cfg.k_max < 1) {
        throw ConfigError("k_max must be >= 1");
    }
    if (cfg.projection.enabled) {
        if (cfg.projection.center.size() != ens.dim() ||
            !(cfg.projection.radius > 0.0)) {
            throw ConfigError("projection needs a center of matching dimension "
                              "and a positive radius");
        }
    }
}

void validate_reference(const LossEnsemble& ens, const Reference& ref) {
    if (ref.theta_star.size() != ens.dim()) {
        throw ShapeError("reference optimum dimension does not match the ensemble");
    }
    if (!std::isfinite(ref.f_star)) {
        throw ConfigError("reference optimum value must be finite");
    }
}

// Per-slot behaviour that differs between the three algorithms.
struct SlotPlan {
    bool use_gains = false;        // aggregate over a fading draw
    double noise_sigma = 0.0;      // per-dimension aggregate noise std
    double per_node_energy = 0.0;  // 0 disables energy accounting
};

RunTrace run_loop(const LossEnsemble& ens, const FadingModel* fading,
                  const SlotPlan& plan, const RunConfig& cfg,
                  const Reference& ref) {
    validate_run_config(ens, cfg);
    validate_reference(ens, ref);

    const int n = ens.node_count();
    RunTrace trace;
    trace.records.reserve(static_cast<std::size_t>(cfg.k_max) + 1);

    ParamVec theta = cfg.theta0;
    for (int k = 0; k <= cfg.k_max; ++k) {
        IterationRecord rec;
        rec.k = k;

        ChannelDraw draw;
        const Eigen::VectorXd* gains = nullptr;
        if (plan.use_gains && k < cfg.k_max) {
            draw = draw_gains(*fading, cfg.seed, static_cast<std::uint64_t>(k), n);
            gains = &draw.gains;
        }

        NodeSweep sweep;
        try {
            sweep = sweep_nodes(ens, theta, gains);
        } catch (const SingularityError&) {
            // An iterate walked into a sensor guard: a runaway run, not a
            // caller error.
            trace.status = RunStatus::kDiverged;
            trace.diverged_at = k;
            break;
        }
        rec.excess_risk = sweep.value - ref.f_star;
        rec.r_sq = (theta - ref.theta_star).squaredNorm();
        rec.grad_norm_sq = sweep.grad_mean.squaredNorm();
        if (cfg.record_theta) {
            trace.thetas.push_back(theta);
        }

        const bool finite_state = std::isfinite(rec.excess_risk) &&
                                  std::isfinite(rec.r_sq) &&
                                  std::isfinite(rec.grad_norm_sq);
        if (!finite_state ||
            (cfg.guard.enabled && (theta.norm() > cfg.guard.norm_limit ||
                                   rec.excess_risk > cfg.guard.excess_limit))) {
            trace.records.push_back(rec);
            trace.status = RunStatus::kDiverged;
            trace.diverged_at = k;
            break;
        }

        if (k == cfg.k_max) {
            trace.records.push_back(rec);  // terminal record: no transmission
            break;
        }

        ParamVec v;
        if (plan.use_gains) {
            v = sweep.weighted_mean;
        } else {
            v = sweep.grad_mean;
        }
        StreamRng noise_rng(cfg.seed, kStreamNoise, static_cast<std::uint64_t>(k));
        add_noise(v, plan.noise_sigma, noise_rng);

        rec.v_norm_sq = v.squaredNorm();
        if (plan.per_node_energy > 0.0) {
            rec.energy_spent = plan.per_node_energy * sweep.sum_sq_grad;
        }
        trace.records.push_back(rec);

        try {
            theta = step(theta, v, cfg.beta, cfg.projection);
        } catch (const DivergenceError&) {
            trace.status = RunStatus::kDiverged;
            trace.diverged_at = k;
            break;
        }
    }
    return trace;
}

}  // namespace

// ========================= core update pieces ===========================

ParamVec aggregate_v(const LossEnsemble& ens, const Eigen::Ref<const ParamVec>& theta,
                     const ChannelDraw& draw, double noise_sigma,
                     StreamRng& noise_rng) {
    if (!(noise_sigma >= 0.0)) {
        throw ConfigError("noise sigma must be >= 0");
    }
    NodeSweep sweep = sweep_nodes(ens, theta, &draw.gains);
    ParamVec v = std::move(sweep.weighted_mean);
    add_noise(v, noise_sigma, noise_rng);
    return v;
}

ParamVec step(const Eigen::Ref<const ParamVec>& theta,
              const Eigen::Ref<const ParamVec>& v, double beta,
              const Projection& projection) {
    if (theta.size() != v.size()) {
        throw ShapeError("update direction dimension does not match theta");
    }
    if (!v.allFinite()) {
        throw DivergenceError("aggregate observation is not finite");
    }
    ParamVec next = theta - beta * v;
    if (projection.enabled) {
        const double dist = (next - projection.center).norm();
        if (dist > projection.radius) {
            next = projection.center +
                   (projection.radius / dist) * (next - projection.center);
        }
    }
    return next;
}

// ========================= stepsize designers ===========================

double design_stepsize_strongly_convex(const ObjectiveConstants& c,
                                       const FadingMoments& m, int n_nodes,
                                       double safety) {
    if (!c.certified) {
        throw ConstantsError("stepsize designer refuses non-certified constants");
    }
    if (!(c.mu > 0.0)) {
        throw ConstantsError("strongly convex designer needs mu > 0");
    }
    if (!(c.delta > 0.0)) {
        throw ConfigError("strongly convex designer needs delta > 0");
    }
    if (!(m.mu_h > 0.0)) {
        throw ConfigError("designer needs a positive gain mean");
    }
    if (!(safety > 0.0) || safety > 1.0) {
        throw ConfigError("safety factor must lie in (0, 1]");
    }
    if (n_nodes < 1) {
        throw ShapeError("designer needs N >= 1");
    }

    const double contraction_limit = 2.0 / (m.mu_h * (c.mu + c.L));
    double distortion_limit = std::numeric_limits<double>::infinity();
    if (m.sigma_h_sq > 0.0) {
        distortion_limit = 2.0 * m.mu_h * c.mu * c.L * static_cast<double>(n_nodes) /
                           (m.sigma_h_sq * c.L_bar * c.L_bar *
                            (1.0 + 2.0 * c.delta) * (c.mu + c.L));
    }
    return safety * std::min(contraction_limit, distortion_limit);
}

double design_stepsize_convex(const ObjectiveConstants& c, const FadingMoments& m,
                              bool equal_gains, double safety) {
    if (!c.certified) {
        throw ConstantsError("stepsize designer refuses non-certified constants");
    }
    if (!(c.L > 0.0)) {
        throw ConstantsError("convex designer needs L > 0");
    }
    if (!(safety > 0.0) || safety > 1.0) {
        throw ConfigError("safety factor must lie in (0, 1]");
    }
    if (equal_gains) {
        return safety / c.L;
    }
    if (!(m.mu_h > 0.0)) {
        throw ConfigError("designer needs a positive gain mean");
    }
    return safety / (c.L * m.mu_h);
}

// ============================= run loops ================================

RunTrace run_gbma(const LossEnsemble& ens, const FadingModel& fading,
                  const NoiseModel& noise, const EnergySchedule& schedule,
                  const RunConfig& cfg, const Reference& ref) {
    SlotPlan plan;
    plan.use_gains = true;
    plan.noise_sigma = effective_noise_sigma(noise, schedule, ens.node_count());
    plan.per_node_energy = schedule.energy_at(ens.node_count());
    return run_loop(ens, &fading, plan, cfg, ref);
}

RunTrace run_centralized(const LossEnsemble& ens, const RunConfig& cfg,
                         const Reference& ref) {
    SlotPlan plan;  // exact gradients: no gains, no noise, no energy
    return run_loop(ens, nullptr, plan, cfg, ref);
}

RunTrace run_fdm(const LossEnsemble& ens, const NoiseModel& noise,
                 double per_node_energy, const RunConfig& cfg,
                 const Reference& ref) {
    if (!(per_node_energy > 0.0)) {
        throw ConfigError("per-node energy must be > 0");
    }
    if (!(noise.sigma_w_sq >= 0.0)) {
        throw ConfigError("noise variance must be >= 0");
    }
    SlotPlan plan;
    plan.noise_sigma = std::sqrt(noise.sigma_w_sq /
                                 (per_node_energy * ens.node_count()));
    plan.per_node_energy = per_node_energy;
    return run_loop(ens, nullptr, plan, cfg, ref);
}

}  // namespace gbma
