#include <doctest.h>

#include <cmath>
#include <vector>

#include "gbma/sim.hpp"

using namespace gbma;

TEST_SUITE_BEGIN("sim");

namespace {

LossEnsemble random_ridge(int n, int d, double lambda, uint64_t seed) {
    StreamRng rng(seed, kStreamDataset);
    std::vector<RidgeLoss> nodes;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x[j] = rng.gaussian();
        nodes.push_back({x, rng.gaussian(), lambda});
    }
    return LossEnsemble::ridge(nodes);
}

Reference ridge_reference(const LossEnsemble& ens) {
    Reference ref;
    ref.theta_star = ridge_minimizer(ens);
    ref.f_star = global_value_and_grad(ens, ref.theta_star).value;
    return ref;
}

// One isotropic node: x = (1), y = 0, no regularizer => mu = L = L_bar = 1.
LossEnsemble unit_curvature_ensemble() {
    Eigen::VectorXd x(1);
    x << 1.0;
    return LossEnsemble::ridge({RidgeLoss{x, 0.0, 0.0}});
}

}  // namespace

// ---------------------------------------------------------------------------
// update pieces
// ---------------------------------------------------------------------------

TEST_CASE("aggregate matches a hand-computed gain-weighted mean") {
    auto ens = random_ridge(5, 3, 0.2, 11);
    ParamVec theta = ParamVec::Constant(3, 0.4);
    ChannelDraw draw;
    draw.k = 0;
    draw.gains.resize(5);
    draw.gains << 0.5, 1.5, 0.0, 2.0, 1.0;

    StreamRng noise(1, kStreamNoise, 0);
    ParamVec v = aggregate_v(ens, theta, draw, 0.0, noise);

    ParamVec want = ParamVec::Zero(3);
    for (int n = 0; n < 5; ++n) want += draw.gains[n] * local_grad(ens, n, theta);
    want /= 5.0;
    CHECK((v - want).norm() < 1e-14 * std::max(1.0, want.norm()));
}

TEST_CASE("step applies theta - beta v and rejects non-finite directions") {
    ParamVec theta(2), v(2);
    theta << 1.0, 2.0;
    v << 0.5, -1.0;
    ParamVec next = step(theta, v, 0.1);
    CHECK(next[0] == doctest::Approx(0.95));
    CHECK(next[1] == doctest::Approx(2.1));

    v[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step(theta, v, 0.1), DivergenceError);
}

TEST_CASE("projection clamps onto the ball surface") {
    Projection proj;
    proj.enabled = true;
    proj.center = ParamVec::Zero(2);
    proj.radius = 1.0;
    ParamVec theta(2), v(2);
    theta << 0.9, 0.0;
    v << -10.0, 0.0;  // pushes theta to (1.9, 0) before the clamp
    ParamVec next = step(theta, v, 0.1, proj);
    CHECK(next.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(next[0] == doctest::Approx(1.0).epsilon(1e-14));
}

// ---------------------------------------------------------------------------
// stepsize designers
// ---------------------------------------------------------------------------

TEST_CASE("strongly convex designer, contraction-limited hand case") {
    auto ens = unit_curvature_ensemble();
    ParamVec theta0(1);
    theta0 << 1.0;
    auto c = compute_constants(ens, theta0, 0.5);
    FadingMoments unit{1.0, 0.0};
    // limit = 2/(mu_h (mu+L)) = 2/2 = 1; no distortion term without variance
    CHECK(design_stepsize_strongly_convex(c, unit, 1, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(design_stepsize_strongly_convex(c, unit, 1, 0.5) ==
          doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("strongly convex designer, distortion-limited hand case") {
    auto ens = unit_curvature_ensemble();
    ParamVec theta0(1);
    theta0 << 1.0;
    auto c = compute_constants(ens, theta0, 0.5);
    FadingMoments fading{1.0, 1.0};
    // contraction limit 1; distortion limit 2*1*1*1*1/(1*1*(1+1)*(1+1)) = 0.5
    CHECK(design_stepsize_strongly_convex(c, fading, 1, 1.0) ==
          doctest::Approx(0.5).epsilon(1e-14));
    // growing the network relaxes the distortion limit linearly
    CHECK(design_stepsize_strongly_convex(c, fading, 4, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("designers refuse surrogate constants and bad safety factors") {
    auto sur = make_surrogate_constants(0.5, 1.0, 1.0, 1.0, 1.0);
    FadingMoments unit{1.0, 0.0};
    CHECK_THROWS_AS(design_stepsize_strongly_convex(sur, unit, 1, 0.9),
                    ConstantsError);
    CHECK_THROWS_AS(design_stepsize_convex(sur, unit, true, 0.9), ConstantsError);

    auto ens = unit_curvature_ensemble();
    ParamVec theta0(1);
    theta0 << 1.0;
    auto c = compute_constants(ens, theta0, 0.5);
    CHECK_THROWS_AS(design_stepsize_strongly_convex(c, unit, 1, 0.0), ConfigError);
    CHECK_THROWS_AS(design_stepsize_strongly_convex(c, unit, 1, 1.5), ConfigError);
}

TEST_CASE("convex designer hand cases") {
    auto ens = unit_curvature_ensemble();
    ParamVec theta0(1);
    theta0 << 1.0;
    auto c = compute_constants(ens, theta0, 0.5);
    CHECK(design_stepsize_convex(c, {1.0, 0.0}, true, 1.0) == doctest::Approx(1.0));
    CHECK(design_stepsize_convex(c, {2.0, 0.3}, false, 1.0) == doctest::Approx(0.5));
    CHECK(design_stepsize_convex(c, {2.0, 0.3}, false, 0.8) == doctest::Approx(0.4));
}

// ---------------------------------------------------------------------------
// run loops: exact equivalences
// ---------------------------------------------------------------------------

TEST_CASE("unit gains and zero noise reproduce centralized descent exactly") {
    auto ens = random_ridge(50, 8, 0.3, 21);
    auto ref = ridge_reference(ens);
    auto c = compute_constants(ens, ParamVec::Zero(8), 1.0);

    RunConfig cfg;
    cfg.beta = 0.9 / c.L;
    cfg.k_max = 200;
    cfg.theta0 = ParamVec::Zero(8);
    cfg.seed = 77;
    cfg.record_theta = true;

    auto over_air = run_gbma(ens, FadingModel::unit(), NoiseModel{0.0},
                             EnergySchedule::constant(1.0), cfg, ref);
    auto central = run_centralized(ens, cfg, ref);

    REQUIRE(over_air.status == RunStatus::kCompleted);
    REQUIRE(central.status == RunStatus::kCompleted);
    REQUIRE(over_air.records.size() == central.records.size());
    for (std::size_t i = 0; i < central.records.size(); ++i) {
        // bit-identical, not approximately equal: same kernel, same order
        CHECK(over_air.records[i].excess_risk == central.records[i].excess_risk);
        CHECK(over_air.records[i].r_sq == central.records[i].r_sq);
        CHECK(over_air.thetas[i] == central.thetas[i]);
    }
}

TEST_CASE("per-node orthogonal baseline with zero receiver noise is exact descent") {
    auto ens = random_ridge(12, 4, 0.5, 31);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 0.2;
    cfg.k_max = 50;
    cfg.theta0 = ParamVec::Ones(4);
    cfg.seed = 5;

    auto fdm = run_fdm(ens, NoiseModel{0.0}, 1.0, cfg, ref);
    auto central = run_centralized(ens, cfg, ref);
    REQUIRE(fdm.records.size() == central.records.size());
    for (std::size_t i = 0; i < fdm.records.size(); ++i) {
        CHECK(fdm.records[i].excess_risk == central.records[i].excess_risk);
    }
}

TEST_CASE("matched noise levels give identical paths across the two channels") {
    // Same noise stream plus equal effective sigma => identical traces.
    // const(1) at N = 4 gives sigma_w/4 = 0.25; the orthogonal baseline
    // needs per-node energy 4 to land on sigma_w/sqrt(16) = 0.25.  All the
    // intermediate values are exact powers of two, so the two sigma
    // computations agree bit for bit.
    auto ens = random_ridge(4, 3, 0.4, 41);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 0.15;
    cfg.k_max = 80;
    cfg.theta0 = ParamVec::Zero(3);
    cfg.seed = 99;

    NoiseModel noise{1.0};
    auto over_air = run_gbma(ens, FadingModel::unit(), noise,
                             EnergySchedule::constant(1.0), cfg, ref);
    auto fdm = run_fdm(ens, noise, 4.0, cfg, ref);
    REQUIRE(over_air.records.size() == fdm.records.size());
    for (std::size_t i = 0; i < fdm.records.size(); ++i) {
        CHECK(over_air.records[i].excess_risk == fdm.records[i].excess_risk);
        CHECK(over_air.records[i].v_norm_sq == fdm.records[i].v_norm_sq);
    }
}

// ---------------------------------------------------------------------------
// run loops: behaviour
// ---------------------------------------------------------------------------

TEST_CASE("trace shape and bookkeeping invariants") {
    auto ens = random_ridge(10, 5, 0.3, 51);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 0.1;
    cfg.k_max = 25;
    cfg.theta0 = ParamVec::Zero(5);
    cfg.seed = 3;

    auto trace = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{0.01},
                          EnergySchedule::constant(1.0), cfg, ref);
    REQUIRE(trace.status == RunStatus::kCompleted);
    REQUIRE(trace.records.size() == 26);
    for (int k = 0; k <= 25; ++k) {
        const auto& r = trace.records[k];
        CHECK(r.k == k);
        CHECK(r.r_sq >= 0.0);
        CHECK(r.grad_norm_sq >= 0.0);
        CHECK(r.energy_spent >= 0.0);
        CHECK(std::isfinite(r.excess_risk));
    }
    // terminal record observes the final iterate but transmits nothing
    CHECK(trace.records.back().v_norm_sq == 0.0);
    CHECK(trace.records.back().energy_spent == 0.0);
    // a transmitting slot does spend energy
    CHECK(trace.records.front().energy_spent > 0.0);
}

TEST_CASE("runs are reproducible from the seed") {
    auto ens = random_ridge(8, 4, 0.2, 61);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 0.12;
    cfg.k_max = 40;
    cfg.theta0 = ParamVec::Zero(4);
    cfg.seed = 1234;

    auto a = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{0.1},
                      EnergySchedule::power_law(1.0), cfg, ref);
    auto b = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{0.1},
                      EnergySchedule::power_law(1.0), cfg, ref);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].excess_risk == b.records[i].excess_risk);
        CHECK(a.records[i].v_norm_sq == b.records[i].v_norm_sq);
    }

    cfg.seed = 1235;
    auto c = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{0.1},
                      EnergySchedule::power_law(1.0), cfg, ref);
    CHECK(a.records[1].excess_risk != c.records[1].excess_risk);
}

TEST_CASE("zero stepsize freezes the iterate") {
    auto ens = random_ridge(6, 3, 0.4, 71);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 0.0;
    cfg.k_max = 10;
    cfg.theta0 = ParamVec::Ones(3);
    cfg.seed = 8;
    auto trace = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{1.0},
                          EnergySchedule::constant(1.0), cfg, ref);
    for (const auto& r : trace.records) {
        CHECK(r.excess_risk == trace.records[0].excess_risk);
        CHECK(r.r_sq == trace.records[0].r_sq);
    }
}

TEST_CASE("strongly convex descent converges at a safe stepsize") {
    auto ens = random_ridge(30, 6, 0.5, 81);
    auto ref = ridge_reference(ens);
    auto c = compute_constants(ens, ParamVec::Zero(6), 1.0);
    RunConfig cfg;
    cfg.beta = 1.0 / c.L;
    cfg.k_max = 400;
    cfg.theta0 = ParamVec::Zero(6);
    auto trace = run_centralized(ens, cfg, ref);
    REQUIRE(trace.status == RunStatus::kCompleted);
    CHECK(trace.records.back().excess_risk < 1e-12);
    CHECK(trace.records.back().excess_risk >= -1e-12);  // f_star really is optimal
}

TEST_CASE("oversized stepsize trips the divergence guard") {
    auto ens = random_ridge(10, 4, 0.5, 91);
    auto ref = ridge_reference(ens);
    auto c = compute_constants(ens, ParamVec::Zero(4), 1.0);
    const double safe = design_stepsize_strongly_convex(
        c, FadingModel::rayleigh(1.0).moments(), 10, 1.0);

    RunConfig cfg;
    cfg.beta = 10.0 * std::max(safe, 2.0 / c.mu);  // far beyond any stable step
    cfg.k_max = 2000;
    cfg.theta0 = ParamVec::Ones(4);
    cfg.seed = 17;
    auto trace = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{0.1},
                          EnergySchedule::constant(1.0), cfg, ref);
    CHECK(trace.status == RunStatus::kDiverged);
    CHECK(trace.diverged_at >= 0);
    CHECK(trace.records.size() <= static_cast<std::size_t>(trace.diverged_at) + 1);
}

TEST_CASE("projection keeps iterates inside the stated ball") {
    auto ens = random_ridge(10, 4, 0.5, 95);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 1.0;  // deliberately too big; projection must contain it
    cfg.k_max = 60;
    cfg.theta0 = ParamVec::Zero(4);
    cfg.seed = 4;
    cfg.projection.enabled = true;
    cfg.projection.center = ref.theta_star;
    cfg.projection.radius = 2.0;
    cfg.record_theta = true;
    auto trace = run_gbma(ens, FadingModel::rayleigh(1.0), NoiseModel{0.5},
                          EnergySchedule::constant(1.0), cfg, ref);
    for (const auto& th : trace.thetas) {
        CHECK((th - ref.theta_star).norm() <= 2.0 + 1e-12);
    }
}

TEST_CASE("run config validation") {
    auto ens = random_ridge(4, 3, 0.1, 97);
    auto ref = ridge_reference(ens);
    RunConfig cfg;
    cfg.beta = 0.1;
    cfg.k_max = 0;  // must be >= 1
    cfg.theta0 = ParamVec::Zero(3);
    CHECK_THROWS_AS(run_centralized(ens, cfg, ref), ConfigError);

    cfg.k_max = 5;
    cfg.theta0 = ParamVec::Zero(2);  // wrong dimension
    CHECK_THROWS_AS(run_centralized(ens, cfg, ref), ShapeError);

    cfg.theta0 = ParamVec::Zero(3);
    Reference bad = ref;
    bad.theta_star = ParamVec::Zero(5);
    CHECK_THROWS_AS(run_centralized(ens, cfg, bad), ShapeError);
}

TEST_SUITE_END();
