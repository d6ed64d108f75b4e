#include "gbma/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gbma/compensated.hpp"

namespace gbma {

namespace {

// ------------------------- shared loss kernels -------------------------
// local_value/local_grad and the ensemble sweep all go through these, so
// the two code paths can never drift apart numerically.

double ridge_value_at(const RidgeLoss& l, const Eigen::Ref<const ParamVec>& theta) {
    const double resid = l.x.dot(theta) - l.y;
    return 0.5 * resid * resid + 0.5 * l.lambda * theta.squaredNorm();
}

void ridge_grad_into(const RidgeLoss& l, const Eigen::Ref<const ParamVec>& theta,
                     ParamVec& out) {
    const double resid = l.x.dot(theta) - l.y;
    out.noalias() = resid * l.x;
    out.noalias() += l.lambda * theta;
}

double localization_sq_dist(const LocalizationLoss& l,
                            const Eigen::Ref<const ParamVec>& theta) {
    const double dx = theta[0] - l.sensor[0];
    const double dy = theta[1] - l.sensor[1];
    const double q = dx * dx + dy * dy;
    if (q < l.guard_radius * l.guard_radius) {
        throw SingularityError(
            "localization loss evaluated within the guard radius of a sensor");
    }
    return q;
}

double localization_value_at(const LocalizationLoss& l,
                             const Eigen::Ref<const ParamVec>& theta) {
    const double q = localization_sq_dist(l, theta);
    const double e = l.measurement - l.strength / q;
    return e * e;
}

void localization_grad_into(const LocalizationLoss& l,
                            const Eigen::Ref<const ParamVec>& theta,
                            ParamVec& out) {
    const double q = localization_sq_dist(l, theta);
    const double e = l.measurement - l.strength / q;
    const double coef = 4.0 * l.strength * e / (q * q);
    out[0] = coef * (theta[0] - l.sensor[0]);
    out[1] = coef * (theta[1] - l.sensor[1]);
}

void check_dim(const LossEnsemble& ens, const Eigen::Ref<const ParamVec>& theta) {
    if (theta.size() != ens.dim()) {
        throw ShapeError("parameter dimension " + std::to_string(theta.size()) +
                         " does not match ensemble dimension " +
                         std::to_string(ens.dim()));
    }
}

void check_node(const LossEnsemble& ens, int n) {
    if (n < 0 || n >= ens.node_count()) {
        throw ShapeError("node index " + std::to_string(n) +
                         " outside [0, " + std::to_string(ens.node_count()) + ")");
    }
}

double ridge_lambda(const LossEnsemble& ens) {
    return ens.ridge_losses().front().lambda;
}

// Ridge Gram matrix H = (1/N) sum x_n x_n' (dense, symmetric).
Eigen::MatrixXd ridge_gram(const LossEnsemble& ens) {
    const auto& losses = ens.ridge_losses();
    const int d = ens.dim();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (const auto& l : losses) {
        h.selfadjointView<Eigen::Lower>().rankUpdate(l.x, 1.0);
    }
    h = h.selfadjointView<Eigen::Lower>();
    h /= static_cast<double>(losses.size());
    return h;
}

}  // namespace

std::pair<double, double> extremal_eigenvalues(const Eigen::MatrixXd& h,
                                               bool force_iterative) {
    const Eigen::Index d = h.rows();
    if (d <= 512 && !force_iterative) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) {
            throw ConstantsError("symmetric eigenvalue solve failed");
        }
        return {solver.eigenvalues()(0), solver.eigenvalues()(d - 1)};
    }

    auto power_top = [&](const Eigen::MatrixXd& m) {
        Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            v[i] += 1e-3 * std::sin(static_cast<double>(i + 1));
        }
        v.normalize();
        double lam = 0.0;
        for (int it = 0; it < 100000; ++it) {
            Eigen::VectorXd w = m * v;
            const double nw = w.norm();
            if (nw == 0.0) return 0.0;
            w /= nw;
            const double lam_next = w.dot(m * w);
            const bool settled = std::abs(lam_next - lam) <= 1e-10 * std::max(1.0, std::abs(lam_next));
            v.swap(w);
            lam = lam_next;
            if (settled && it > 2) break;
        }
        return lam;
    };

    const double lam_max = power_top(h);
    Eigen::MatrixXd shifted = -h;
    shifted.diagonal().array() += lam_max;
    const double lam_min = lam_max - power_top(shifted);
    return {lam_min, lam_max};
}

// ============================ LossEnsemble ==============================

LossEnsemble LossEnsemble::ridge(std::vector<RidgeLoss> losses) {
    if (losses.empty()) {
        throw ShapeError("ensemble needs at least one node");
    }
    const Eigen::Index d = losses.front().x.size();
    if (d < 1) {
        throw ShapeError("ridge features must have dimension >= 1");
    }
    const double lambda = losses.front().lambda;
    if (!(lambda >= 0.0)) {
        throw ConfigError("ridge weight must be >= 0");
    }
    for (const auto& l : losses) {
        if (l.x.size() != d) {
            throw ShapeError("all ridge features must share one dimension");
        }
        if (l.lambda != lambda) {
            throw ConfigError("ridge weight must be shared across nodes");
        }
        if (!l.x.allFinite() || !std::isfinite(l.y)) {
            throw ConfigError("ridge data must be finite");
        }
    }
    LossEnsemble ens;
    ens.kind_ = LossKind::kRidge;
    ens.dim_ = static_cast<int>(d);
    ens.losses_ = std::move(losses);
    return ens;
}

LossEnsemble LossEnsemble::localization(std::vector<LocalizationLoss> losses) {
    if (losses.empty()) {
        throw ShapeError("ensemble needs at least one node");
    }
    for (const auto& l : losses) {
        if (!(l.strength > 0.0)) {
            throw ConfigError("source strength must be > 0");
        }
        if (!(l.guard_radius > 0.0)) {
            throw ConfigError("guard radius must be > 0");
        }
        if (!l.sensor.allFinite() || !std::isfinite(l.measurement)) {
            throw ConfigError("localization data must be finite");
        }
    }
    LossEnsemble ens;
    ens.kind_ = LossKind::kLocalization;
    ens.dim_ = 2;
    ens.losses_ = std::move(losses);
    return ens;
}

int LossEnsemble::node_count() const {
    if (kind_ == LossKind::kRidge) {
        return static_cast<int>(std::get<0>(losses_).size());
    }
    return static_cast<int>(std::get<1>(losses_).size());
}

const std::vector<RidgeLoss>& LossEnsemble::ridge_losses() const {
    if (kind_ != LossKind::kRidge) {
        throw ShapeError("ensemble does not hold ridge losses");
    }
    return std::get<0>(losses_);
}

const std::vector<LocalizationLoss>& LossEnsemble::localization_losses() const {
    if (kind_ != LossKind::kLocalization) {
        throw ShapeError("ensemble does not hold localization losses");
    }
    return std::get<1>(losses_);
}

// ======================= pointwise evaluations ==========================

double local_value(const LossEnsemble& ens, int n, const Eigen::Ref<const ParamVec>& theta) {
    check_dim(ens, theta);
    check_node(ens, n);
    if (ens.kind() == LossKind::kRidge) {
        return ridge_value_at(ens.ridge_losses()[n], theta);
    }
    return localization_value_at(ens.localization_losses()[n], theta);
}

ParamVec local_grad(const LossEnsemble& ens, int n, const Eigen::Ref<const ParamVec>& theta) {
    check_dim(ens, theta);
    check_node(ens, n);
    ParamVec g(ens.dim());
    if (ens.kind() == LossKind::kRidge) {
        ridge_grad_into(ens.ridge_losses()[n], theta, g);
    } else {
        localization_grad_into(ens.localization_losses()[n], theta, g);
    }
    return g;
}

NodeSweep sweep_nodes(const LossEnsemble& ens,
                      const Eigen::Ref<const ParamVec>& theta,
                      const Eigen::VectorXd* gains) {
    const int n = ens.node_count();
    if (n < 1) {
        throw ShapeError("ensemble is empty");
    }
    check_dim(ens, theta);
    const int d = ens.dim();
    if (gains != nullptr && gains->size() != n) {
        throw ShapeError("gain vector length does not match node count");
    }

    CompensatedScalar value;
    CompensatedVector grad(d);
    CompensatedVector weighted(gains != nullptr ? d : 0);
    ParamVec g(d);
    double sum_sq = 0.0;
    double max_sq = 0.0;

    for (int i = 0; i < n; ++i) {
        if (ens.kind() == LossKind::kRidge) {
            const auto& l = ens.ridge_losses()[i];
            value.add(ridge_value_at(l, theta));
            ridge_grad_into(l, theta, g);
        } else {
            const auto& l = ens.localization_losses()[i];
            value.add(localization_value_at(l, theta));
            localization_grad_into(l, theta, g);
        }
        grad.add(g);
        if (gains != nullptr) {
            weighted.add_scaled((*gains)[i], g);
        }
        const double sq = g.squaredNorm();
        sum_sq += sq;
        max_sq = std::max(max_sq, sq);
    }

    NodeSweep out;
    const double inv_n = 1.0 / static_cast<double>(n);
    out.value = value.value() * inv_n;
    out.grad_mean = grad.value() * inv_n;
    if (gains != nullptr) {
        out.weighted_mean = weighted.value() * inv_n;
    }
    out.sum_sq_grad = sum_sq;
    out.max_sq_grad = max_sq;
    return out;
}

GlobalEval global_value_and_grad(const LossEnsemble& ens,
                                 const Eigen::Ref<const ParamVec>& theta) {
    NodeSweep s = sweep_nodes(ens, theta, nullptr);
    return GlobalEval{s.value, std::move(s.grad_mean)};
}

// ====================== curvature and minimizers ========================

ParamVec ridge_minimizer(const LossEnsemble& ens) {
    const auto& losses = ens.ridge_losses();
    const int d = ens.dim();
    const double lambda = ridge_lambda(ens);

    Eigen::MatrixXd a = ridge_gram(ens);
    a.diagonal().array() += lambda;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (const auto& l : losses) {
        b.noalias() += l.y * l.x;
    }
    b /= static_cast<double>(losses.size());

    if (lambda == 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.rank() < d) {
            throw SingularSystemError(
                "ridge system is singular with zero regularization: "
                "no unique minimizer");
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    ParamVec theta = ldlt.solve(b);
    const double resid = (a * theta - b).norm();
    if (!(resid <= 1e-10 * std::max(1.0, b.norm()))) {
        throw SingularSystemError("ridge normal equations solve failed "
                                  "(relative residual too large)");
    }
    return theta;
}

ParamVec ridge_node_minimizer(const LossEnsemble& ens, int n) {
    check_node(ens, n);
    const auto& l = ens.ridge_losses()[n];
    const double denom = l.x.squaredNorm() + l.lambda;
    if (denom == 0.0) {
        throw SingularSystemError("node loss is identically zero: "
                                  "no unique minimizer");
    }
    // (x x' + lambda I) t = y x has the closed-form solution t = a x with
    // a = y / (|x|^2 + lambda); for lambda == 0 and x != 0 this is the
    // minimum-norm minimizer.
    return (l.y / denom) * l.x;
}

double ridge_minimizer_spread(const LossEnsemble& ens,
                              const Eigen::Ref<const ParamVec>& theta_star) {
    check_dim(ens, theta_star);
    double worst = 0.0;
    for (int n = 0; n < ens.node_count(); ++n) {
        worst = std::max(worst, (ridge_node_minimizer(ens, n) - theta_star).norm());
    }
    return worst;
}

ObjectiveConstants compute_constants(const LossEnsemble& ens,
                                     const Eigen::Ref<const ParamVec>& theta0,
                                     double delta) {
    if (ens.kind() != LossKind::kRidge) {
        throw ConstantsError("no closed-form curvature constants for " +
                             std::string(to_string(ens.kind())) +
                             " ensembles; supply surrogates");
    }
    check_dim(ens, theta0);
    if (!(delta > 0.0)) {
        throw ConfigError("spread parameter must be > 0");
    }

    const double lambda = ridge_lambda(ens);
    const Eigen::MatrixXd h = ridge_gram(ens);
    const auto [ev_min, ev_max] = extremal_eigenvalues(h);

    ObjectiveConstants c;
    c.mu = std::max(0.0, ev_min) + lambda;  // H is PSD up to roundoff
    c.L = ev_max + lambda;
    double worst = 0.0;
    for (const auto& l : ens.ridge_losses()) {
        worst = std::max(worst, l.x.squaredNorm() + lambda);
    }
    c.L_bar = worst;
    c.delta = delta;
    c.r0_sq = (theta0 - ridge_minimizer(ens)).squaredNorm();
    c.certified = true;
    return c;
}

ObjectiveConstants compute_constants(const LossEnsemble& ens,
                                     const Eigen::Ref<const ParamVec>& theta0) {
    // Resolve the default spread first; it needs r0, which needs theta*.
    const double r0 = (theta0 - ridge_minimizer(ens)).norm();
    return compute_constants(ens, theta0, default_delta(r0));
}

double composed_smoothness(const LossEnsemble& ens) {
    if (ens.kind() != LossKind::kRidge) {
        throw ConstantsError("per-node smoothness is only certified for ridge");
    }
    CompensatedScalar acc;
    for (const auto& l : ens.ridge_losses()) {
        acc.add(l.x.squaredNorm() + l.lambda);
    }
    return acc.value() / static_cast<double>(ens.node_count());
}

double composed_strong_convexity(const LossEnsemble& ens) {
    if (ens.kind() != LossKind::kRidge) {
        throw ConstantsError("per-node strong convexity is only certified for ridge");
    }
    return ridge_lambda(ens);  // every node contributes exactly lambda
}

ObjectiveConstants make_surrogate_constants(double mu, double L, double L_bar,
                                            double delta, double r0_sq) {
    if (!(L > 0.0) || !(L_bar >= L) || !(mu >= 0.0) || mu > L) {
        throw ConfigError("surrogate constants must satisfy 0 <= mu <= L <= L_bar, L > 0");
    }
    if (!(delta > 0.0) || !(r0_sq >= 0.0)) {
        throw ConfigError("surrogate constants need delta > 0 and r0_sq >= 0");
    }
    ObjectiveConstants c;
    c.mu = mu;
    c.L = L;
    c.L_bar = L_bar;
    c.delta = delta;
    c.r0_sq = r0_sq;
    c.certified = false;
    return c;
}

ParamVec localization_minimizer(const LossEnsemble& ens,
                                const Eigen::Ref<const ParamVec>& theta_init,
                                int max_iters, double grad_tol) {
    if (ens.kind() != LossKind::kLocalization) {
        throw ConstantsError("numeric minimizer is for localization ensembles; "
                             "ridge has a closed form");
    }
    check_dim(ens, theta_init);

    ParamVec theta = theta_init;
    GlobalEval cur = global_value_and_grad(ens, theta);
    // Warm-started trial step: grows after every accepted step so flat
    // basins (curvature far below 1) are handled as well as spiky regions.
    double t = 1.0 / std::max(1.0, cur.grad.norm());
    for (int it = 0; it < max_iters; ++it) {
        const double gnorm = cur.grad.norm();
        if (gnorm <= grad_tol) break;

        // Armijo backtracking, robust to trial points that fall inside a
        // sensor guard (treated as insufficient decrease).
        double trial_t = t;
        bool moved = false;
        for (int half = 0; half < 60; ++half) {
            const ParamVec trial = theta - trial_t * cur.grad;
            try {
                GlobalEval te = global_value_and_grad(ens, trial);
                if (te.value <= cur.value - 0.5 * trial_t * gnorm * gnorm) {
                    theta = trial;
                    cur = std::move(te);
                    t = 2.0 * trial_t;
                    moved = true;
                    break;
                }
            } catch (const SingularityError&) {
                // fall through to a shorter step
            }
            trial_t *= 0.5;
        }
        if (!moved) break;  // no descent direction left at float precision
    }
    return theta;
}

// ========================= property checking ============================

SandwichReport smoothness_sandwich_check(const LossEnsemble& ens, int trials,
                                         StreamRng& rng, double box_lo,
                                         double box_hi, double L_override) {
    if (trials < 1) {
        throw ConfigError("property check needs at least one trial");
    }
    double L = L_override;
    if (L <= 0.0) {
        L = compute_constants(ens, ParamVec::Zero(ens.dim()), 1.0).L;
    }

    const int d = ens.dim();
    SandwichReport report;
    report.trials = trials;

    ParamVec a(d), b(d);
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < d; ++i) a[i] = rng.uniform(box_lo, box_hi);
        for (int i = 0; i < d; ++i) b[i] = rng.uniform(box_lo, box_hi);

        const GlobalEval ea = global_value_and_grad(ens, a);
        const GlobalEval eb = global_value_and_grad(ens, b);

        const double middle = eb.value - ea.value - ea.grad.dot(b - a);
        const double lower = (ea.grad - eb.grad).squaredNorm() / (2.0 * L);
        const double upper = 0.5 * L * (a - b).squaredNorm();

        const double tol = 1e-9 * std::max({1.0, std::abs(middle), upper});
        const double lower_gap = middle - lower;
        const double upper_gap = upper - middle;
        if (lower_gap < -tol || upper_gap < -tol) {
            ++report.violations;
            if (report.details.size() < 32) {
                report.details.push_back(
                    {t, std::min(0.0, lower_gap), std::min(0.0, upper_gap)});
            }
        }
        report.worst_gap = std::min({report.worst_gap, lower_gap, upper_gap});
    }
    return report;
}

}  // namespace gbma
