#include "gbma/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gbma {

namespace {

void require_certified(const ObjectiveConstants& c, bool force) {
    if (!c.certified && !force) {
        throw ConstantsError("bound evaluator refuses non-certified constants "
                             "(pass force to override)");
    }
}

void require_operating_point(double sigma_w_sq, int n_nodes, double e_n, int dim) {
    if (!(sigma_w_sq >= 0.0)) {
        throw ConfigError("noise variance must be >= 0");
    }
    if (n_nodes < 1 || dim < 1) {
        throw ShapeError("bound needs N >= 1 and d >= 1");
    }
    if (!(e_n > 0.0)) {
        throw ConfigError("per-node energy must be > 0");
    }
}

double aggregate_noise_power(double sigma_w_sq, int n_nodes, double e_n, int dim) {
    const double n = static_cast<double>(n_nodes);
    return static_cast<double>(dim) * sigma_w_sq / (e_n * n * n);
}

}  // namespace

// ===================== strongly convex contraction ======================

double thm1_rate_c(double beta, const ObjectiveConstants& c, const FadingMoments& m,
                   int n_nodes, bool force_uncertified) {
    require_certified(c, force_uncertified);
    if (!(c.mu > 0.0)) {
        throw ConstantsError("contraction rate needs mu > 0");
    }
    if (!(c.delta > 0.0)) {
        throw ConfigError("contraction rate needs delta > 0");
    }
    if (!(m.mu_h > 0.0)) {
        throw ConfigError("contraction rate needs a positive gain mean");
    }
    if (n_nodes < 1) {
        throw ShapeError("contraction rate needs N >= 1");
    }
    if (!(beta > 0.0)) {
        throw InfeasibleStepsizeError("stepsize must be > 0");
    }

    const double contraction_limit = 2.0 / (m.mu_h * (c.mu + c.L));
    if (!(beta < contraction_limit)) {
        throw InfeasibleStepsizeError(
            "stepsize " + std::to_string(beta) + " violates the contraction "
            "limit 2/(mu_h (mu+L)) = " + std::to_string(contraction_limit));
    }
    if (m.sigma_h_sq > 0.0) {
        const double distortion_limit =
            2.0 * m.mu_h * c.mu * c.L * static_cast<double>(n_nodes) /
            (m.sigma_h_sq * c.L_bar * c.L_bar * (1.0 + 2.0 * c.delta) *
             (c.mu + c.L));
        if (!(beta < distortion_limit)) {
            throw InfeasibleStepsizeError(
                "stepsize " + std::to_string(beta) + " violates the distortion "
                "limit 2 mu_h mu L N / (sigma_h^2 Lbar^2 (1+2 delta)(mu+L)) = " +
                std::to_string(distortion_limit));
        }
    }

    const double rate =
        1.0 - 2.0 * beta * m.mu_h * c.mu * c.L / (c.mu + c.L) +
        beta * beta * m.sigma_h_sq * c.L_bar * c.L_bar *
            (1.0 + 2.0 * c.delta) / static_cast<double>(n_nodes);
    if (!(rate > 0.0 && rate < 1.0)) {
        throw InfeasibleStepsizeError(
            "contraction factor " + std::to_string(rate) +
            " falls outside (0, 1); choose a smaller stepsize");
    }
    return rate;
}

double strongly_convex_bound(int k, double beta, const ObjectiveConstants& c,
                             const FadingMoments& m, double sigma_w_sq,
                             int n_nodes, double e_n, int dim,
                             bool force_uncertified) {
    if (k < 0) {
        throw ConfigError("bound needs k >= 0");
    }
    require_operating_point(sigma_w_sq, n_nodes, e_n, dim);
    const double rate = thm1_rate_c(beta, c, m, n_nodes, force_uncertified);

    const double n = static_cast<double>(n_nodes);
    const double distortion_power = m.sigma_h_sq * c.delta * c.L_bar * c.L_bar *
                                    (2.0 + c.delta) / n;
    const double noise_power = aggregate_noise_power(sigma_w_sq, n_nodes, e_n, dim);
    const double floor = c.L * beta * beta / (2.0 * (1.0 - rate)) *
                         (distortion_power + noise_power);
    return std::pow(rate, k) * c.r0_sq * c.L / 2.0 + floor;
}

// ========================== convex-case bounds ==========================

double convex_equal_gain_bound(int k, double beta, double r0_sq, double sigma_w_sq,
                               int n_nodes, double e_n, int dim) {
    if (k < 1) {
        throw ConfigError("convex bound is undefined at k = 0");
    }
    if (!(beta > 0.0)) {
        throw InfeasibleStepsizeError("stepsize must be > 0");
    }
    if (!(r0_sq >= 0.0)) {
        throw ConfigError("r0^2 must be >= 0");
    }
    require_operating_point(sigma_w_sq, n_nodes, e_n, dim);
    return r0_sq / (2.0 * beta * static_cast<double>(k)) +
           beta * aggregate_noise_power(sigma_w_sq, n_nodes, e_n, dim);
}

double convex_fading_bound(int k, double beta, double r0_sq, const FadingMoments& m,
                           double sigma_w_sq, int n_nodes, double e_n, int dim,
                           double b_n) {
    if (k < 1) {
        throw ConfigError("convex bound is undefined at k = 0");
    }
    if (!(beta > 0.0)) {
        throw InfeasibleStepsizeError("stepsize must be > 0");
    }
    if (!(r0_sq >= 0.0) || !(b_n >= 0.0)) {
        throw ConfigError("r0^2 and the gradient power bound must be >= 0");
    }
    if (!(m.mu_h > 0.0)) {
        throw ConfigError("fading bound needs a positive gain mean");
    }
    require_operating_point(sigma_w_sq, n_nodes, e_n, dim);
    const double n = static_cast<double>(n_nodes);
    return r0_sq / (2.0 * beta * m.mu_h * static_cast<double>(k)) +
           (beta / m.mu_h) * (b_n * m.sigma_h_sq / n +
                              aggregate_noise_power(sigma_w_sq, n_nodes, e_n, dim));
}

// ========================= centralized bounds ===========================

double centralized_strong_bound(int k, double beta, const ObjectiveConstants& c,
                                bool force_uncertified) {
    if (k < 0) {
        throw ConfigError("bound needs k >= 0");
    }
    require_certified(c, force_uncertified);
    if (!(c.mu > 0.0)) {
        throw ConstantsError("centralized strong bound needs mu > 0");
    }
    if (!(beta > 0.0) || !(beta < 2.0 / (c.mu + c.L))) {
        throw InfeasibleStepsizeError(
            "stepsize must satisfy 0 < beta < 2/(mu+L) = " +
            std::to_string(2.0 / (c.mu + c.L)));
    }
    const double rate = 1.0 - 2.0 * beta * c.mu * c.L / (c.mu + c.L);
    return std::pow(rate, k) * c.r0_sq * c.L / 2.0;
}

double centralized_convex_bound(int k, double beta, double r0_sq) {
    if (k < 1) {
        throw ConfigError("convex bound is undefined at k = 0");
    }
    if (!(beta > 0.0)) {
        throw InfeasibleStepsizeError("stepsize must be > 0");
    }
    if (!(r0_sq >= 0.0)) {
        throw ConfigError("r0^2 must be >= 0");
    }
    return r0_sq / (2.0 * beta * static_cast<double>(k));
}

// ===================== descent-monotonicity condition ===================

MonotonicityReport check_monotonicity_condition(const std::vector<double>& grad_sq_means,
                                                double sigma_w_sq, double e_n,
                                                int n_nodes, int dim) {
    require_operating_point(sigma_w_sq, n_nodes, e_n, dim);
    MonotonicityReport report;
    report.threshold = aggregate_noise_power(sigma_w_sq, n_nodes, e_n, dim);
    report.above.reserve(grad_sq_means.size());
    for (double g : grad_sq_means) {
        report.above.push_back(g > report.threshold);
    }
    // The condition starts at i = 1 (theta_0 is the caller's choice, not a
    // descent product).
    int k = 0;
    for (std::size_t i = 1; i < report.above.size(); ++i) {
        if (!report.above[i]) break;
        k = static_cast<int>(i);
    }
    report.largest_k = k;
    return report;
}

// ============================ B(N) estimate =============================

double estimate_gradient_power_bound(const LossEnsemble& ens,
                                     const Eigen::Ref<const ParamVec>& center,
                                     double radius, int samples, StreamRng& rng) {
    if (!(radius >= 0.0)) {
        throw ConfigError("probe radius must be >= 0");
    }
    if (samples < 0) {
        throw ConfigError("sample count must be >= 0");
    }
    double worst = sweep_nodes(ens, center, nullptr).max_sq_grad;
    ParamVec point(center.size());
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < point.size(); ++i) {
            point[i] = center[i] + radius * rng.uniform(-1.0, 1.0);
        }
        worst = std::max(worst, sweep_nodes(ens, point, nullptr).max_sq_grad);
    }
    return 1.1 * worst;  // declared safety margin over the sampled maximum
}

// ================== gradient-power region inequality ====================

GradSumReport gradient_sum_bound_check(const LossEnsemble& ens,
                                       const ObjectiveConstants& c,
                                       const std::vector<ParamVec>& thetas) {
    if (!(c.delta > 0.0)) {
        throw ConfigError("region inequality needs delta > 0");
    }
    const ParamVec theta_star = ridge_minimizer(ens);
    const int n = ens.node_count();
    const double n_d = static_cast<double>(n);

    std::vector<ParamVec> node_minimizers;
    node_minimizers.reserve(n);
    for (int i = 0; i < n; ++i) {
        node_minimizers.push_back(ridge_node_minimizer(ens, i));
    }

    GradSumReport report;
    for (const auto& m : node_minimizers) {
        report.spread = std::max(report.spread, (m - theta_star).norm());
    }
    report.spread_ok = report.spread <= c.delta;

    for (const auto& theta : thetas) {
        GradSumRow row;
        const NodeSweep sweep = sweep_nodes(ens, theta, nullptr);
        row.lhs = sweep.sum_sq_grad / (n_d * n_d);
        row.r = (theta - theta_star).norm();
        row.rhs = c.L_bar * c.L_bar / n_d *
                  (row.r * row.r + 2.0 * c.delta * row.r + c.delta * c.delta);

        row.near_all_node_minimizers = true;
        for (const auto& m : node_minimizers) {
            if ((theta - m).norm() > c.delta) {
                row.near_all_node_minimizers = false;
                break;
            }
        }

        const double tol = 1e-12 * std::max(1.0, row.rhs);
        row.violated = row.lhs > row.rhs + tol;
        if (row.violated) {
            ++report.violations;
            if (row.near_all_node_minimizers || report.spread_ok) {
                ++report.violations_with_precondition;
            }
        }
        report.rows.push_back(row);
    }
    return report;
}

// ============================ bound curves ==============================

const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::kStronglyConvex: return "strongly_convex";
        case BoundKind::kConvexEqualGain: return "convex_equal_gain";
        case BoundKind::kConvexFading: return "convex_fading";
        case BoundKind::kCentralStrong: return "centralized_strong";
        case BoundKind::kCentralConvex: return "centralized_convex";
    }
    return "unknown";
}

std::vector<double> bound_curve(BoundKind kind, int k_max, const BoundInputs& in) {
    if (k_max < 0) {
        throw ConfigError("bound curve needs k_max >= 0");
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> values(static_cast<std::size_t>(k_max) + 1, nan);

    switch (kind) {
        case BoundKind::kStronglyConvex:
            for (int k = 0; k <= k_max; ++k) {
                values[k] = strongly_convex_bound(k, in.beta, in.consts, in.moments,
                                                  in.sigma_w_sq, in.n_nodes, in.e_n,
                                                  in.dim, in.force_uncertified);
            }
            break;
        case BoundKind::kConvexEqualGain:
            require_certified(in.consts, in.force_uncertified);
            if (!(in.beta < 1.0 / in.consts.L)) {
                throw InfeasibleStepsizeError(
                    "equal-gain convex bound needs beta < 1/L = " +
                    std::to_string(1.0 / in.consts.L));
            }
            for (int k = 1; k <= k_max; ++k) {
                values[k] = convex_equal_gain_bound(k, in.beta, in.consts.r0_sq,
                                                    in.sigma_w_sq, in.n_nodes,
                                                    in.e_n, in.dim);
            }
            break;
        case BoundKind::kConvexFading:
            require_certified(in.consts, in.force_uncertified);
            if (!(in.beta < 1.0 / (in.consts.L * in.moments.mu_h))) {
                throw InfeasibleStepsizeError(
                    "fading convex bound needs beta < 1/(L mu_h) = " +
                    std::to_string(1.0 / (in.consts.L * in.moments.mu_h)));
            }
            for (int k = 1; k <= k_max; ++k) {
                values[k] = convex_fading_bound(k, in.beta, in.consts.r0_sq,
                                                in.moments, in.sigma_w_sq,
                                                in.n_nodes, in.e_n, in.dim, in.b_n);
            }
            break;
        case BoundKind::kCentralStrong:
            for (int k = 0; k <= k_max; ++k) {
                values[k] = centralized_strong_bound(k, in.beta, in.consts,
                                                     in.force_uncertified);
            }
            break;
        case BoundKind::kCentralConvex:
            require_certified(in.consts, in.force_uncertified);
            if (!(in.beta < 1.0 / in.consts.L)) {
                throw InfeasibleStepsizeError(
                    "centralized convex bound needs beta < 1/L = " +
                    std::to_string(1.0 / in.consts.L));
            }
            for (int k = 1; k <= k_max; ++k) {
                values[k] = centralized_convex_bound(k, in.beta, in.consts.r0_sq);
            }
            break;
    }
    return values;
}

}  // namespace gbma
