#pragma once

/**
 * Local losses, ensembles and objective curvature constants.
 *
 * Two concrete loss families are supported:
 *   - ridge regression:  f_n(t) = 0.5*(x_n't - y_n)^2 + 0.5*lambda*|t|^2
 *   - source localization: f_n(t) = (x_n - A/|t - r_n|^2)^2  (2-D, nonconvex)
 *
 * The global objective is always the plain average F = (1/N) sum f_n, and
 * the average is evaluated with compensated summation in index-ascending
 * order so repeated evaluation is bit-identical.
 */

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gbma/errors.hpp"
#include "gbma/rng.hpp"

namespace gbma {

using ParamVec = Eigen::VectorXd;

// ============================ loss families =============================

struct RidgeLoss {
    Eigen::VectorXd x;   // feature vector
    double y = 0.0;      // target
    double lambda = 0.0; // shared ridge weight, >= 0
};

struct LocalizationLoss {
    Eigen::Vector2d sensor;       // sensor position r_n
    double measurement = 0.0;     // received power x_n
    double strength = 1.0;        // source strength constant A > 0
    double guard_radius = 1e-3;   // evaluation closer than this to the
                                  // sensor is an error, not a clamp
};

enum class LossKind { kRidge, kLocalization };

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::kRidge: return "ridge";
        case LossKind::kLocalization: return "localization";
    }
    return "unknown";
}

/**
 * A homogeneous collection of N >= 1 local losses over a shared parameter
 * space.  Value semantics; cheap to copy at desk scale.
 */
class LossEnsemble {
  public:
    // Empty until assigned from one of the factories below; every
    // evaluation rejects an empty ensemble.
    LossEnsemble() = default;

    static LossEnsemble ridge(std::vector<RidgeLoss> losses);
    static LossEnsemble localization(std::vector<LocalizationLoss> losses);

    LossKind kind() const { return kind_; }
    int node_count() const;
    int dim() const { return dim_; }

    const std::vector<RidgeLoss>& ridge_losses() const;
    const std::vector<LocalizationLoss>& localization_losses() const;

  private:
    LossKind kind_ = LossKind::kRidge;
    int dim_ = 0;
    std::variant<std::vector<RidgeLoss>, std::vector<LocalizationLoss>> losses_;
};

// ===================== pointwise loss evaluations =======================

// Value / gradient of node n's loss (n is 0-based, 0 <= n < N).
double local_value(const LossEnsemble& ens, int n, const Eigen::Ref<const ParamVec>& theta);
ParamVec local_grad(const LossEnsemble& ens, int n, const Eigen::Ref<const ParamVec>& theta);

struct GlobalEval {
    double value = 0.0;
    ParamVec grad;
};

// F(theta) and grad F(theta) in one pass (compensated, index-ascending).
GlobalEval global_value_and_grad(const LossEnsemble& ens,
                                 const Eigen::Ref<const ParamVec>& theta);

/**
 * Single pass over all nodes at a fixed parameter point.  This is the one
 * summation kernel shared by the objective evaluation and by the channel
 * aggregation, which is what makes a unit-gain noiseless aggregate equal
 * the centralized gradient bit for bit.  `gains` may be null (plain mean
 * only) or must hold one nonnegative weight per node.
 */
struct NodeSweep {
    double value = 0.0;        // F(theta)
    ParamVec grad_mean;        // (1/N) sum g_n
    ParamVec weighted_mean;    // (1/N) sum h_n g_n  (empty when gains == null)
    double sum_sq_grad = 0.0;  // sum_n |g_n|^2
    double max_sq_grad = 0.0;  // max_n |g_n|^2
};

NodeSweep sweep_nodes(const LossEnsemble& ens,
                      const Eigen::Ref<const ParamVec>& theta,
                      const Eigen::VectorXd* gains = nullptr);

// ====================== curvature and minimizers ========================

/**
 * Strong convexity / smoothness description of the global objective.
 * `certified` marks constants derived exactly from the data (ridge);
 * user-supplied surrogates (localization) are never certified and most
 * bound evaluators refuse them unless explicitly forced.
 */
struct ObjectiveConstants {
    double mu = 0.0;     // strong convexity of F
    double L = 0.0;      // smoothness of F
    double L_bar = 0.0;  // max over nodes of the local smoothness L_n
    double delta = 0.0;  // declared spread parameter (> 0 for contraction bounds)
    double r0_sq = 0.0;  // |theta_0 - theta_star|^2
    bool certified = false;
};

// Default spread rule used when the scenario does not pin one explicitly.
inline double default_delta(double r0) { return 2.0 * (r0 + 1.0); }

// Exact ridge minimizer: solves (H + lambda I) t = (1/N) sum y_n x_n.
// Throws SingularSystemError when lambda == 0 and H is rank-deficient.
ParamVec ridge_minimizer(const LossEnsemble& ens);

// Per-node ridge minimizer (closed form) and the largest distance from the
// global minimizer to any per-node minimizer.  The latter is the smallest
// spread parameter under which the contraction bounds' premise holds.
ParamVec ridge_node_minimizer(const LossEnsemble& ens, int n);
double ridge_minimizer_spread(const LossEnsemble& ens, const Eigen::Ref<const ParamVec>& theta_star);

/**
 * Exact constants for a ridge ensemble:
 *   mu = lambda_min(H) + lambda,  L = lambda_max(H) + lambda,
 *   L_bar = max_n (|x_n|^2 + lambda),   H = (1/N) sum x_n x_n'.
 * Eigenvalue extremes come from a dense symmetric solve for dim <= 512 and
 * from power iteration above that.  Throws ConstantsError for ensembles
 * with no closed-form constants (localization).
 */
ObjectiveConstants compute_constants(const LossEnsemble& ens,
                                     const Eigen::Ref<const ParamVec>& theta0,
                                     double delta);

// Overload resolving delta by the default rule 2*(r0 + 1).
ObjectiveConstants compute_constants(const LossEnsemble& ens,
                                     const Eigen::Ref<const ParamVec>& theta0);

// Composition rule: averaging preserves smoothness/strong convexity
// linearly, so (1/N) sum L_n and (1/N) sum mu_n are always valid (possibly
// loose) constants for F.  Exposed mainly for cross-checks.
double composed_smoothness(const LossEnsemble& ens);
double composed_strong_convexity(const LossEnsemble& ens);

// User-supplied surrogate constants (never certified).
ObjectiveConstants make_surrogate_constants(double mu, double L, double L_bar,
                                            double delta, double r0_sq);

// Numeric empirical-risk minimizer for localization ensembles: backtracking
// gradient descent started from `theta_init` (typically the true source).
// Converges to the local minimizer of the basin containing the start.
ParamVec localization_minimizer(const LossEnsemble& ens,
                                const Eigen::Ref<const ParamVec>& theta_init,
                                int max_iters = 2000, double grad_tol = 1e-12);

// ========================= property checking ============================

struct SandwichViolation {
    int trial = 0;
    double lower_gap = 0.0;  // min(0, middle - lower): negative when violated
    double upper_gap = 0.0;  // min(0, upper - middle): negative when violated
};

struct SandwichReport {
    int trials = 0;
    int violations = 0;
    double worst_gap = 0.0;  // most negative slack seen (0 when clean)
    std::vector<SandwichViolation> details;
};

/**
 * Samples `trials` random pairs (a, b) in the box [box_lo, box_hi]^d and
 * checks both sides of the smoothness sandwich for the global objective:
 *   (1/2L)|grad F(a) - grad F(b)|^2 <= F(b) - F(a) - <grad F(a), b - a>
 *                                   <= (L/2)|a - b|^2.
 * `L_override > 0` substitutes a different smoothness constant (used by
 * negative controls); otherwise the certified L is computed internally.
 */
SandwichReport smoothness_sandwich_check(const LossEnsemble& ens, int trials,
                                         StreamRng& rng, double box_lo = -2.0,
                                         double box_hi = 2.0,
                                         double L_override = 0.0);

// Extremal eigenvalues (min, max) of a dense symmetric PSD matrix.  Uses a
// dense symmetric solve up to dim 512 and power iteration above that;
// `force_iterative` routes small matrices through the iterative path too,
// which exists so the fallback can be validated against the dense solver.
std::pair<double, double> extremal_eigenvalues(const Eigen::MatrixXd& h,
                                               bool force_iterative = false);

}  // namespace gbma
