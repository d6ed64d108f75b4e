// Acceptance gate: ten end-to-end checks, one [PASS]/[FAIL] line each.
// Exit code is the number of failed checks.  argv[1] (optional) is the path
// to the command-line binary, used by the determinism check.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gbma/analysis.hpp"
#include "gbma/config.hpp"
#include "gbma/bounds.hpp"
#include "gbma/channel.hpp"
#include "gbma/datasets.hpp"
#include "gbma/model.hpp"
#include "gbma/presets.hpp"
#include "gbma/rng.hpp"
#include "gbma/scenario.hpp"
#include "gbma/sim.hpp"

namespace {

using namespace gbma;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) { return format_number(v); }

LossEnsemble synth(int n, int d, double lambda, std::uint64_t seed,
                   double noise_std = 0.1) {
    SyntheticRidgeSpec spec;
    spec.n_nodes = n;
    spec.dim = d;
    spec.lambda = lambda;
    spec.seed = seed;
    spec.noise_std = noise_std;
    return gen_synthetic_ridge(spec).ensemble;
}

Reference reference_of(const LossEnsemble& ens) {
    Reference ref;
    ref.theta_star = ridge_minimizer(ens);
    ref.f_star = global_value_and_grad(ens, ref.theta_star).value;
    return ref;
}

// delta that provably covers the per-node minimizer spread
double covering_delta(const LossEnsemble& ens, const ParamVec& theta_star,
                      double r0) {
    const double spread = ridge_minimizer_spread(ens, theta_star);
    return std::max(default_delta(r0), 1.05 * spread);
}

// ========================= C1: exact aggregation =========================
// Zero channel noise and unit gains turn the shared-slot update into exact
// gradient descent; iterates must coincide to near machine precision.

Outcome c1_degenerate_equivalence() {
    LossEnsemble ens = synth(100, 10, 0.5, 11);
    Reference ref = reference_of(ens);
    ObjectiveConstants consts =
        compute_constants(ens, ParamVec::Zero(10));
    FadingModel unit = FadingModel::unit();
    const double beta =
        design_stepsize_strongly_convex(consts, unit.moments(), 100, 0.9);

    RunConfig rc;
    rc.beta = beta;
    rc.k_max = 200;
    rc.theta0 = ParamVec::Zero(10);
    rc.seed = 42;
    rc.record_theta = true;

    RunTrace g = run_gbma(ens, unit, NoiseModel{0.0},
                          EnergySchedule::constant(1.0), rc, ref);
    RunTrace c = run_centralized(ens, rc, ref);

    if (g.status != RunStatus::kCompleted || c.status != RunStatus::kCompleted ||
        g.thetas.size() != c.thetas.size()) {
        return {false, "runs did not complete identically"};
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < g.thetas.size(); ++k) {
        const double gap = (g.thetas[k] - c.thetas[k]).norm() /
                           std::max(1.0, c.thetas[k].norm());
        worst = std::max(worst, gap);
    }
    return {worst <= 1e-12,
            "max relative iterate gap " + num(worst) + " (limit 1e-12)"};
}

// ===================== C2 / C3: aggregate moments ========================

Outcome c2_mean_identity() {
    LossEnsemble ens = synth(50, 5, 0.5, 21);
    auto report = validate_mean_v(ens, FadingModel::rayleigh(1.0),
                                  NoiseModel{1.0}, EnergySchedule::constant(1.0),
                                  ParamVec::Zero(5), 10000, 1234);
    return {report.pass, "max |z| = " + num(report.max_abs_z) + " over " +
                             std::to_string(report.draws) +
                             " draws (limit 4)"};
}

Outcome c3_second_moment_identity() {
    LossEnsemble ens = synth(50, 5, 0.5, 21);
    auto report = validate_second_moment_v(
        ens, FadingModel::rayleigh(1.0), NoiseModel{1.0},
        EnergySchedule::constant(1.0), ParamVec::Zero(5), 100000, 1234);
    return {report.pass, "relative error " + num(report.rel_err) + " over " +
                             std::to_string(report.draws) +
                             " draws (limit 0.03)"};
}

// ================== C4: contraction-bound dominance ======================
// The closed-form strongly convex curve must sit above the Monte Carlo mean
// at (almost) every iteration.

Outcome c4_bound_dominance() {
    const int n = 200, d = 10, k_max = 300, reps = 500;
    LossEnsemble ens = synth(n, d, 0.5, 31);
    Reference ref = reference_of(ens);
    const ParamVec theta0 = ParamVec::Zero(d);
    const double r0 = (theta0 - ref.theta_star).norm();
    ObjectiveConstants consts =
        compute_constants(ens, theta0, covering_delta(ens, ref.theta_star, r0));

    FadingModel fading = FadingModel::rayleigh(1.0);
    const FadingMoments moments = fading.moments();
    const double beta =
        design_stepsize_strongly_convex(consts, moments, n, 0.9);
    EnergySchedule energy = EnergySchedule::power_law(1.0);
    NoiseModel noise{1.0};

    RunConfig rc;
    rc.beta = beta;
    rc.k_max = k_max;
    rc.theta0 = theta0;
    auto mc = monte_carlo(
        [&](std::uint64_t seed) {
            RunConfig r = rc;
            r.seed = seed;
            return run_gbma(ens, fading, noise, energy, r, ref);
        },
        reps, 40001);
    if (mc.stats.diverged != 0) {
        return {false, std::to_string(mc.stats.diverged) + " divergences"};
    }

    BoundInputs in;
    in.beta = beta;
    in.consts = consts;
    in.moments = moments;
    in.sigma_w_sq = noise.sigma_w_sq;
    in.n_nodes = n;
    in.e_n = energy.energy_at(n);
    in.dim = d;
    const std::vector<double> bound =
        bound_curve(BoundKind::kStronglyConvex, k_max, in);

    int violations = 0;
    int beyond_2se = 0;
    for (int k = 0; k <= k_max; ++k) {
        if (mc.stats.excess_mean[k] <= bound[k]) continue;
        ++violations;
        if (mc.stats.excess_mean[k] > bound[k] + 2.0 * mc.stats.excess_se[k]) {
            ++beyond_2se;
        }
    }
    const int allowed = (k_max + 1) / 100;  // 1% of the grid
    const bool pass = beyond_2se == 0 && violations <= allowed;
    return {pass, std::to_string(violations) + "/" + std::to_string(k_max + 1) +
                      " crossings (allowed " + std::to_string(allowed) +
                      "), " + std::to_string(beyond_2se) + " beyond 2 SE"};
}

// ================ C5: noise-floor scaling across N =======================
// Equal gains at fixed stepsize and per-node energy: the plateau tracks the
// 1/N^2 aggregate noise variance, so x4 nodes gives ~x16 lower floor.

Outcome c5_floor_scaling() {
    const double beta = 0.2;
    double plateau[2] = {0.0, 0.0};
    const int n_grid[2] = {100, 400};
    for (int i = 0; i < 2; ++i) {
        LossEnsemble ens = synth(n_grid[i], 5, 0.5, 51);
        Reference ref = reference_of(ens);
        RunConfig rc;
        rc.beta = beta;
        rc.k_max = 600;
        rc.theta0 = ParamVec::Zero(5);
        auto mc = monte_carlo(
            [&](std::uint64_t seed) {
                RunConfig r = rc;
                r.seed = seed;
                return run_gbma(ens, FadingModel::unit(), NoiseModel{1.0},
                                EnergySchedule::constant(1.0), r, ref);
            },
            200, 50001);
        if (mc.stats.diverged != 0) return {false, "divergence at fixed beta"};
        PlateauEstimate p = plateau_estimator(mc.stats.excess_mean);
        if (!p.converged) return {false, "plateau not converged"};
        plateau[i] = p.value;
    }
    const double ratio = plateau[1] / plateau[0];
    const bool pass = ratio >= 1.0 / 32.0 && ratio <= 1.0 / 8.0;
    return {pass, "plateau ratio N=400 / N=100 = " + num(ratio) +
                      " (window [1/32, 1/8], target 1/16)"};
}

// ==================== C6: energy scaling across N ========================
// Localization family at per-node energy N^(-1.5): both the excess-risk
// plateau and the transmit energy needed to reach 1e-2 shrink as N grows.

Outcome c6_energy_scaling() {
    const Preset* preset = find_preset("fig6");
    if (preset == nullptr || preset->scenarios.size() != 3) {
        return {false, "fig6 preset missing"};
    }
    const fs::path dir = fs::temp_directory_path() /
                         ("gbma_acc_c6_" + std::to_string(::getpid()));
    std::vector<double> plateaus;
    std::vector<EnergyToTarget> energies;
    for (const PresetScenario& sc : preset->scenarios) {
        ScenarioConfig cfg = sc.cfg;
        cfg.output_dir = dir.string();
        ScenarioOutputs out = run_scenario(cfg);
        if (out.divergences != 0) {
            fs::remove_all(dir);
            return {false, "divergences in " + sc.name};
        }
        plateaus.push_back(plateau_estimator(out.stats.excess_mean).value);
        energies.push_back(energy_to_target(out.mc, preset->energy_target));
    }
    fs::remove_all(dir);

    const bool plateau_ok =
        plateaus[0] > plateaus[1] && plateaus[1] > plateaus[2];

    // per-replication majority vote on the strict energy ordering
    int votes_for = 0, votes_counted = 0;
    const std::size_t reps = energies[0].per_rep_energy.size();
    for (std::size_t r = 0; r < reps; ++r) {
        bool all_reached = true;
        for (const auto& e : energies) {
            if (r >= e.per_rep_energy.size() ||
                !std::isfinite(e.per_rep_energy[r])) {
                all_reached = false;
            }
        }
        if (!all_reached) continue;
        ++votes_counted;
        if (energies[0].per_rep_energy[r] > energies[1].per_rep_energy[r] &&
            energies[1].per_rep_energy[r] > energies[2].per_rep_energy[r]) {
            ++votes_for;
        }
    }
    const bool energy_ok = votes_counted > 0 && 2 * votes_for > votes_counted;
    return {plateau_ok && energy_ok,
            "plateaus " + num(plateaus[0]) + " / " + num(plateaus[1]) + " / " +
                num(plateaus[2]) + (plateau_ok ? " (decreasing)" : " (NOT)") +
                "; energy vote " + std::to_string(votes_for) + "/" +
                std::to_string(votes_counted)};
}

// ============ C7: shared slot vs orthogonal baseline =====================

Outcome c7_vs_orthogonal_baseline() {
    // the shared-slot run beats the orthogonal baseline on the pre-floor
    // horizon (its faster effective gain) and loses after both reach their
    // floors (measured crossing near k = 104 for this operating point)
    const int n = 800, d = 10, k_max = 80, reps = 100;
    LossEnsemble ens = synth(n, d, 0.5, 1001);
    Reference ref = reference_of(ens);
    const ParamVec theta0 = ParamVec::Zero(d);
    ObjectiveConstants consts = compute_constants(ens, theta0);
    FadingModel fading = FadingModel::rayleigh(1.0);
    const double beta =
        design_stepsize_strongly_convex(consts, fading.moments(), n, 0.1);
    NoiseModel noise{0.01};
    EnergySchedule schedule = EnergySchedule::power_law(0.5);  // E_N = N^-1.5

    RunConfig rc;
    rc.beta = beta;
    rc.k_max = k_max;
    rc.theta0 = theta0;
    auto mc_g = monte_carlo(
        [&](std::uint64_t seed) {
            RunConfig r = rc;
            r.seed = seed;
            return run_gbma(ens, fading, noise, schedule, r, ref);
        },
        reps, 70001);
    auto mc_f = monte_carlo(
        [&](std::uint64_t seed) {
            RunConfig r = rc;
            r.seed = seed;
            return run_fdm(ens, noise, 1.0, r, ref);
        },
        reps, 70002);
    if (mc_g.stats.diverged != 0 || mc_f.stats.diverged != 0) {
        return {false, "divergences"};
    }
    const double g_final = mc_g.stats.excess_mean.back();
    const double f_final = mc_f.stats.excess_mean.back();

    // closed-form per-dimension noise-variance ratio at equal energy
    const double e = 1.0;
    const double shared = effective_noise_sigma(noise, EnergySchedule::constant(e), n);
    const double ratio = (noise.sigma_w_sq / (e * n)) / (shared * shared);
    const bool ratio_ok = std::abs(ratio - n) <= n * 1e-12;

    const bool pass = g_final < f_final && ratio_ok;
    return {pass, "final excess " + num(g_final) + " (shared slot) vs " +
                      num(f_final) + " (orthogonal); equal-energy variance "
                      "ratio " + num(ratio) + " (want " + std::to_string(n) +
                      ")"};
}

// ======================= C8: linear-rate checks ==========================

Outcome c8_linear_rate() {
    // (a) quadratic with hand-computable contraction: H = I via two axis
    // nodes, lambda = 0, so theta <- (1 - beta) theta and excess contracts
    // by (1 - beta)^2 per step
    std::vector<RidgeLoss> axis(2);
    axis[0].x = std::sqrt(2.0) * Eigen::Vector2d::Unit(0);
    axis[1].x = std::sqrt(2.0) * Eigen::Vector2d::Unit(1);
    axis[0].y = axis[1].y = 0.0;
    axis[0].lambda = axis[1].lambda = 0.0;
    LossEnsemble quad = LossEnsemble::ridge(axis);
    Reference qref;
    qref.theta_star = ParamVec::Zero(2);
    qref.f_star = 0.0;

    const double beta_q = 0.3;
    RunConfig rcq;
    rcq.beta = beta_q;
    rcq.k_max = 40;
    rcq.theta0 = Eigen::Vector2d(2.0, 1.0);
    auto mcq = monte_carlo(
        [&](std::uint64_t seed) {
            RunConfig r = rcq;
            r.seed = seed;
            return run_centralized(quad, r, qref);
        },
        1, 80001);
    const double c_true = (1.0 - beta_q) * (1.0 - beta_q);
    double slope_q = 0.0;
    try {
        slope_q = slope_estimator(mcq.stats.excess_mean, 0, 15);
    } catch (const Error& e) {
        return {false, std::string("window rejected: ") + e.what()};
    }
    const double want = std::log(c_true);
    const bool pass_a = std::abs(slope_q - want) <= 0.05 * std::abs(want);

    // (b) the noisy shared-slot run must contract at least as fast as its
    // closed-form rate
    const int n = 100, d = 10, k_max = 200;
    LossEnsemble ens = synth(n, d, 0.5, 81);
    Reference ref = reference_of(ens);
    const ParamVec theta0 = ParamVec::Zero(d);
    const double r0 = (theta0 - ref.theta_star).norm();
    ObjectiveConstants consts =
        compute_constants(ens, theta0, covering_delta(ens, ref.theta_star, r0));
    FadingModel fading = FadingModel::rayleigh(1.0);
    const double beta =
        design_stepsize_strongly_convex(consts, fading.moments(), n, 0.9);
    const double rate = thm1_rate_c(beta, consts, fading.moments(), n);

    RunConfig rc;
    rc.beta = beta;
    rc.k_max = k_max;
    rc.theta0 = theta0;
    auto mc = monte_carlo(
        [&](std::uint64_t seed) {
            RunConfig r = rc;
            r.seed = seed;
            return run_gbma(ens, fading, NoiseModel{1.0},
                            EnergySchedule::power_law(1.0), r, ref);
        },
        200, 80002);
    if (mc.stats.diverged != 0) return {false, "divergences"};

    const PlateauEstimate plateau = plateau_estimator(mc.stats.excess_mean);
    int k_hi = 10;
    for (int k = 1; k <= 100 && k <= k_max; ++k) {
        if (mc.stats.excess_mean[k] >= 50.0 * std::max(plateau.value, 1e-300)) {
            k_hi = k;
        }
    }
    double slope_g = 0.0;
    try {
        slope_g = slope_estimator(mc.stats.excess_mean, 1, k_hi);
    } catch (const Error& e) {
        return {false, std::string("noisy-run window rejected: ") + e.what()};
    }
    const bool pass_b = slope_g <= std::log(rate) + 0.02;

    return {pass_a && pass_b,
            "quadratic slope " + num(slope_q) + " vs ln(c) = " + num(want) +
                "; noisy slope " + num(slope_g) + " vs ln(rate) = " +
                num(std::log(rate))};
}

// ========================= C9: property suites ===========================

Outcome c9_property_suites() {
    std::string detail;

    // (i) two-sided smoothness sandwich on random pairs
    LossEnsemble ens = synth(50, 8, 0.3, 91);
    StreamRng rng(91, kStreamMisc);
    SandwichReport sandwich = smoothness_sandwich_check(ens, 1000, rng);
    const bool sandwich_ok = sandwich.violations == 0;
    detail += "sandwich " + std::to_string(sandwich.violations) + "/1000";

    // (ii) iterate-distance to gradient-power inequality at covered spread
    const ParamVec theta_star = ridge_minimizer(ens);
    const double spread = ridge_minimizer_spread(ens, theta_star);
    ObjectiveConstants consts =
        compute_constants(ens, ParamVec::Zero(8), 1.05 * spread + 1e-9);
    StreamRng point_rng(92, kStreamMisc);
    std::vector<ParamVec> thetas;
    for (int i = 0; i < 100; ++i) {
        ParamVec t(8);
        for (int j = 0; j < 8; ++j) t[j] = point_rng.uniform(-3.0, 3.0);
        thetas.push_back(std::move(t));
    }
    GradSumReport grad_sum = gradient_sum_bound_check(ens, consts, thetas);
    const bool grad_sum_ok = grad_sum.violations == 0 && grad_sum.spread_ok;
    detail += "; region " + std::to_string(grad_sum.violations) + "/100";

    // (iii) analytic gradients vs central differences, both loss kinds
    auto fd_check = [](const LossEnsemble& e, const ParamVec& theta, int node) {
        const ParamVec grad = local_grad(e, node, theta);
        ParamVec fd(theta.size());
        const double h = 1e-6;
        for (int j = 0; j < theta.size(); ++j) {
            ParamVec up = theta, dn = theta;
            up[j] += h;
            dn[j] -= h;
            fd[j] = (local_value(e, node, up) - local_value(e, node, dn)) /
                    (2.0 * h);
        }
        return (fd - grad).norm() / std::max(1e-8, grad.norm());
    };
    StreamRng fd_rng(93, kStreamMisc);
    double worst_fd = 0.0;
    for (int i = 0; i < 100; ++i) {
        ParamVec t(8);
        for (int j = 0; j < 8; ++j) t[j] = fd_rng.uniform(-2.0, 2.0);
        worst_fd = std::max(worst_fd, fd_check(ens, t, i % 50));
    }
    LocalizationFieldSpec field;
    field.n_nodes = 40;
    field.seed = 93;
    field.snr_db = std::numeric_limits<double>::infinity();
    LossEnsemble loc = gen_localization_field(field).ensemble;
    for (int i = 0; i < 100; ++i) {
        ParamVec t(2);
        bool clear = false;
        while (!clear) {
            t[0] = fd_rng.uniform(0.0, 100.0);
            t[1] = fd_rng.uniform(0.0, 100.0);
            clear = true;
            for (const auto& l : loc.localization_losses()) {
                if ((l.sensor - Eigen::Vector2d(t[0], t[1])).norm() < 0.5) {
                    clear = false;
                }
            }
        }
        worst_fd = std::max(worst_fd, fd_check(loc, t, i % 40));
    }
    const bool fd_ok = worst_fd <= 1e-5;
    detail += "; fd worst " + num(worst_fd);

    // (iv) a stepsize 10x past the designed limit must trip the guard;
    // at this node count the design sits at the contraction limit, so 10x
    // is far beyond the true stability edge
    LossEnsemble small = synth(1000, 5, 0.5, 95);
    Reference sref = reference_of(small);
    ObjectiveConstants sconsts = compute_constants(small, ParamVec::Zero(5));
    FadingModel fading = FadingModel::rayleigh(1.0);
    const double beta_limit =
        design_stepsize_strongly_convex(sconsts, fading.moments(), 1000, 1.0);
    RunConfig rc;
    rc.beta = 10.0 * beta_limit;
    rc.k_max = 400;
    rc.theta0 = ParamVec::Zero(5);
    rc.seed = 96;
    RunTrace blown = run_gbma(small, fading, NoiseModel{1.0},
                              EnergySchedule::constant(1.0), rc, sref);
    const bool guard_ok = blown.status == RunStatus::kDiverged;
    detail += std::string("; guard ") + (guard_ok ? "tripped" : "NOT tripped");

    return {sandwich_ok && grad_sum_ok && fd_ok && guard_ok, detail};
}

// ======================= C10: preset determinism =========================

Outcome c10_preset_determinism(const std::string& cli) {
    if (cli.empty()) {
        return {false, "path to the command-line binary was not supplied"};
    }
    const fs::path base = fs::temp_directory_path() /
                          ("gbma_acc_c10_" + std::to_string(::getpid()));
    const fs::path dir_a = base / "a";
    const fs::path dir_b = base / "b";
    fs::create_directories(dir_a);
    fs::create_directories(dir_b);

    auto run_once = [&](const fs::path& dir) {
        const std::string cmd = "\"" + cli + "\" preset fig3b --out \"" +
                                dir.string() + "\" > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    if (run_once(dir_a) != 0 || run_once(dir_b) != 0) {
        fs::remove_all(base);
        return {false, "preset run returned a nonzero exit code"};
    }

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    int compared = 0;
    bool identical = true;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        if (entry.path().extension() != ".csv") continue;
        ++compared;
        const fs::path twin = dir_b / entry.path().filename();
        if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
            identical = false;
        }
    }
    fs::remove_all(base);
    const bool pass = identical && compared >= 3;
    return {pass, std::to_string(compared) + " csv files compared, " +
                      (identical ? "all byte-identical" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    int failures = 0;

    struct Check {
        int id;
        const char* label;
        std::function<Outcome()> fn;
    };
    const std::vector<Check> checks = {
        {1, "exact-aggregation equivalence", [] { return c1_degenerate_equivalence(); }},
        {2, "aggregate mean identity", [] { return c2_mean_identity(); }},
        {3, "aggregate second-moment identity", [] { return c3_second_moment_identity(); }},
        {4, "contraction-bound dominance", [] { return c4_bound_dominance(); }},
        {5, "noise-floor scaling across node counts", [] { return c5_floor_scaling(); }},
        {6, "energy scaling across node counts", [] { return c6_energy_scaling(); }},
        {7, "shared slot beats orthogonal baseline on its horizon", [] { return c7_vs_orthogonal_baseline(); }},
        {8, "linear-rate estimation", [] { return c8_linear_rate(); }},
        {9, "property suites", [] { return c9_property_suites(); }},
        {10, "preset determinism", [&] { return c10_preset_determinism(cli); }},
    };

    for (const Check& check : checks) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = check.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " C" << check.id
                  << " " << check.label << ": " << outcome.detail << " ["
                  << format_number(secs) << " s]" << std::endl;
        if (!outcome.pass) ++failures;
    }
    return failures;
}
