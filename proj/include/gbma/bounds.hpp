#pragma once

/**
 * Closed-form finite-horizon error bounds for the over-the-air descent and
 * for centralized descent, plus the estimators and property checks that
 * feed them.
 *
 * All evaluators are pure arithmetic on explicitly passed operating-point
 * parameters.  Feasibility rules are enforced as errors (never silently
 * clamped), and evaluators refuse non-certified curvature constants unless
 * the caller forces them.
 */

#include <cstdint>
#include <vector>

#include "gbma/channel.hpp"
#include "gbma/model.hpp"

namespace gbma {

// ===================== strongly convex contraction ======================

/**
 * Per-iteration contraction factor of the squared-distance recursion:
 *   c = 1 - 2 beta mu_h mu L / (mu + L)
 *         + beta^2 sigma_h^2 Lbar^2 (1 + 2 delta) / N.
 * Validates the stepsize window (strictly) and requires c in (0, 1).
 */
double thm1_rate_c(double beta, const ObjectiveConstants& c, const FadingMoments& m,
                   int n_nodes, bool force_uncertified = false);

/**
 * Strongly convex expected-excess-risk bound at iteration k >= 0:
 *   c^k r0^2 L / 2
 *   + (L beta^2 / (2 (1 - c))) (sigma_h^2 delta Lbar^2 (2 + delta) / N
 *                               + d sigma_w^2 / (E_N N^2)).
 */
double strongly_convex_bound(int k, double beta, const ObjectiveConstants& c,
                             const FadingMoments& m, double sigma_w_sq,
                             int n_nodes, double e_n, int dim,
                             bool force_uncertified = false);

// ========================== convex-case bounds ==========================

// Equal-gain convex bound at k >= 1: r0^2/(2 beta k) + beta d sigma_w^2/(E_N N^2).
double convex_equal_gain_bound(int k, double beta, double r0_sq, double sigma_w_sq,
                               int n_nodes, double e_n, int dim);

// Fading convex bound at k >= 1:
//   r0^2/(2 beta mu_h k) + (beta/mu_h)(B_N sigma_h^2 / N + d sigma_w^2/(E_N N^2)),
// where B_N bounds max_n |grad f_n|^2 over the region the iterates visit.
double convex_fading_bound(int k, double beta, double r0_sq, const FadingMoments& m,
                           double sigma_w_sq, int n_nodes, double e_n, int dim,
                           double b_n);

// ========================= centralized bounds ===========================

// (1 - 2 beta mu L/(mu + L))^k r0^2 L / 2, for 0 < beta < 2/(mu + L).
double centralized_strong_bound(int k, double beta, const ObjectiveConstants& c,
                                bool force_uncertified = false);

// r0^2 / (2 beta k) for k >= 1, for 0 < beta < 1/L (not checked here:
// the caller owns L when only r0 is passed).
double centralized_convex_bound(int k, double beta, double r0_sq);

// ===================== descent-monotonicity condition ===================

/**
 * The convex-case analysis only certifies per-step improvement while the
 * expected gradient power stays above the aggregate noise floor:
 *   E|grad F(theta_i)|^2 > d sigma_w^2 / (E_N N^2),  i = 1..k.
 */
struct MonotonicityReport {
    double threshold = 0.0;       // d sigma_w^2 / (E_N N^2)
    std::vector<bool> above;      // one flag per input entry (index = k)
    int largest_k = 0;            // largest k with all of i = 1..k above
};

MonotonicityReport check_monotonicity_condition(const std::vector<double>& grad_sq_means,
                                                double sigma_w_sq, double e_n,
                                                int n_nodes, int dim);

// ============================ B(N) estimate =============================

/**
 * Sampled upper estimate of max_n |grad f_n(theta)|^2 over a probe box
 * centered at `center` with half-width `radius`, inflated by a fixed 10%
 * safety margin.  The center itself is always probed, which makes the
 * estimate monotone in `radius` for convex per-node gradient norms when
 * the same stream is reused.
 */
double estimate_gradient_power_bound(const LossEnsemble& ens,
                                     const Eigen::Ref<const ParamVec>& center,
                                     double radius, int samples, StreamRng& rng);

// ================== gradient-power region inequality ====================

/**
 * Checks, at each supplied theta, the inequality that converts iterate
 * distance into aggregate gradient power:
 *   (1/N^2) sum_n |grad f_n(theta)|^2
 *     <= (Lbar^2/N) r^2 + (2 Lbar^2 delta/N) r + Lbar^2 delta^2 / N,
 * with r = |theta - theta_star|.  It is guaranteed when the per-node
 * minimizers all sit within delta of theta_star (`spread_ok`), or when
 * theta itself is within delta of every per-node minimizer (per-row flag).
 */
struct GradSumRow {
    double lhs = 0.0;
    double rhs = 0.0;
    double r = 0.0;
    bool near_all_node_minimizers = false;
    bool violated = false;
};

struct GradSumReport {
    std::vector<GradSumRow> rows;
    int violations = 0;                  // any row with lhs > rhs
    int violations_with_precondition = 0;  // violated rows that were covered
    double spread = 0.0;                 // max_n |theta_star - theta_star_n|
    bool spread_ok = false;              // spread <= delta
};

GradSumReport gradient_sum_bound_check(const LossEnsemble& ens,
                                       const ObjectiveConstants& c,
                                       const std::vector<ParamVec>& thetas);

// ============================ bound curves ==============================

enum class BoundKind {
    kStronglyConvex,
    kConvexEqualGain,
    kConvexFading,
    kCentralStrong,
    kCentralConvex,
};

const char* to_string(BoundKind k);

// Everything a bound evaluation needs, resolved to plain numbers.
struct BoundInputs {
    double beta = 0.0;
    ObjectiveConstants consts;
    FadingMoments moments;
    double sigma_w_sq = 0.0;
    int n_nodes = 0;
    double e_n = 0.0;   // per-node energy at this N
    int dim = 0;
    double b_n = 0.0;   // gradient power bound for the fading convex case
    bool force_uncertified = false;
};

// Bound values for k = 0..k_max; entries that are undefined at k = 0 are
// quiet NaN (rendered as empty CSV fields downstream).
std::vector<double> bound_curve(BoundKind kind, int k_max, const BoundInputs& in);

}  // namespace gbma
