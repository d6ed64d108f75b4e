#include "gbma/scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gbma/datasets.hpp"
#include "gbma/rng.hpp"

namespace gbma {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ===== config -> runnable pieces =====

FadingModel make_channel(const ScenarioConfig& cfg) {
    FadingModel base = FadingModel::unit();
    switch (cfg.channel_kind) {
        case ChannelKindCfg::unit:
            base = FadingModel::unit();
            break;
        case ChannelKindCfg::rayleigh:
            base = FadingModel::rayleigh(cfg.channel_scale);
            break;
        case ChannelKindCfg::uniform:
            base = FadingModel::generic_iid(cfg.channel_mu_h, cfg.channel_var,
                                            GainSampler::kUniform);
            break;
        case ChannelKindCfg::lognormal:
            base = FadingModel::generic_iid(cfg.channel_mu_h, cfg.channel_var,
                                            GainSampler::kLognormal);
            break;
    }
    if (cfg.channel_phase_max > 0.0) {
        return FadingModel::with_phase_residual(base, cfg.channel_phase_max);
    }
    return base;
}

EnergySchedule make_energy(const ScenarioConfig& cfg) {
    switch (cfg.energy_kind) {
        case EnergyKindCfg::constant:
            return EnergySchedule::constant(cfg.energy_value);
        case EnergyKindCfg::power_law:
            return EnergySchedule::power_law(cfg.energy_epsilon);
        case EnergyKindCfg::exponent:
            break;
    }
    return EnergySchedule::exponent(cfg.energy_p);
}

ResolvedScenario resolve_scenario(const ScenarioConfig& cfg) {
    ResolvedScenario rs;
    rs.cfg = cfg;

    // dataset
    switch (cfg.loss_kind) {
        case LossKindCfg::ridge_synthetic: {
            auto data = gen_synthetic_ridge(cfg.ridge);
            rs.ensemble = std::move(data.ensemble);
            break;
        }
        case LossKindCfg::ridge_csv: {
            auto data = load_year_csv(cfg.csv);
            rs.ensemble = std::move(data.ensemble);
            rs.notes.push_back("csv rows loaded: " + std::to_string(data.rows));
            break;
        }
        case LossKindCfg::localization: {
            auto data = gen_localization_field(cfg.field);
            rs.ensemble = std::move(data.ensemble);
            break;
        }
    }
    rs.n_nodes = rs.ensemble.node_count();
    rs.dim = rs.ensemble.dim();

    // channel, noise, energy
    rs.channel = make_channel(cfg);
    rs.moments = rs.channel.moments();
    rs.noise.sigma_w_sq = cfg.sigma_w_sq;
    rs.energy = make_energy(cfg);
    rs.e_n = rs.energy.energy_at(rs.n_nodes);
    rs.effective_sigma = effective_noise_sigma(rs.noise, rs.energy, rs.n_nodes);

    // start point
    if (cfg.theta0_zero) {
        rs.theta0 = ParamVec::Zero(rs.dim);
    } else {
        if (cfg.theta0_list.size() != rs.dim) {
            throw ConfigError("run.theta0: expected " + std::to_string(rs.dim) +
                              " coordinates, got " +
                              std::to_string(cfg.theta0_list.size()));
        }
        rs.theta0 = cfg.theta0_list;
    }

    // reference point
    if (cfg.loss_kind == LossKindCfg::localization) {
        rs.ref.theta_star = localization_minimizer(rs.ensemble, cfg.field.source);
    } else {
        rs.ref.theta_star = ridge_minimizer(rs.ensemble);
    }
    rs.ref.f_star = global_value_and_grad(rs.ensemble, rs.ref.theta_star).value;

    // curvature constants
    const double r0 = (rs.theta0 - rs.ref.theta_star).norm();
    if (cfg.loss_kind == LossKindCfg::localization) {
        if (cfg.has_surrogate) {
            const double delta =
                cfg.delta_auto ? default_delta(r0) : cfg.delta_value;
            rs.consts = make_surrogate_constants(cfg.surrogate_mu, cfg.surrogate_L,
                                                 cfg.surrogate_L_bar, delta,
                                                 r0 * r0);
            rs.has_constants = true;
        }
    } else {
        if (cfg.delta_auto) {
            rs.consts = compute_constants(rs.ensemble, rs.theta0);
        } else {
            rs.consts = compute_constants(rs.ensemble, rs.theta0, cfg.delta_value);
        }
        rs.has_constants = true;
    }

    // stepsize
    if (cfg.beta_mode == BetaMode::number) {
        rs.beta = cfg.beta_value;
    } else {
        if (!rs.has_constants) {
            throw ConstantsError(
                "run.beta: automatic stepsize design needs curvature constants; "
                "give loss.mu/loss.L/loss.L_bar or a numeric run.beta");
        }
        switch (cfg.beta_mode) {
            case BetaMode::auto_strong:
                rs.beta = design_stepsize_strongly_convex(rs.consts, rs.moments,
                                                          rs.n_nodes, cfg.safety);
                break;
            case BetaMode::auto_convex_equal:
                rs.beta = design_stepsize_convex(rs.consts, rs.moments, true,
                                                 cfg.safety);
                break;
            case BetaMode::auto_convex_fading:
                rs.beta = design_stepsize_convex(rs.consts, rs.moments, false,
                                                 cfg.safety);
                break;
            case BetaMode::number:
                break;
        }
    }

    // contraction factor, when the strongly convex analysis applies
    rs.rate_c = kNaN;
    if (rs.has_constants && (rs.consts.certified || cfg.bounds_force)) {
        try {
            rs.rate_c = thm1_rate_c(rs.beta, rs.consts, rs.moments, rs.n_nodes,
                                    cfg.bounds_force);
        } catch (const Error& e) {
            rs.notes.push_back(std::string("contraction factor undefined: ") +
                               e.what());
        }
    }

    // gradient-power bound for the fading convex analysis
    rs.b_n = kNaN;
    const bool fading_bound_possible = cfg.bounds_emit &&
                                       cfg.algorithm == AlgorithmKind::gbma &&
                                       rs.moments.sigma_h_sq > 0.0 &&
                                       cfg.loss_kind != LossKindCfg::localization;
    if (fading_bound_possible) {
        if (cfg.bounds_b_auto) {
            const double radius =
                cfg.probe_radius > 0.0 ? cfg.probe_radius : 1.5 * r0;
            StreamRng probe(cfg.seed, kStreamProbe);
            rs.b_n = estimate_gradient_power_bound(rs.ensemble, rs.ref.theta_star,
                                                   radius, cfg.probe_samples, probe);
        } else {
            rs.b_n = cfg.bounds_b;
        }
    }

    // operating SNR, for the record
    rs.snr_value_db = kNaN;
    try {
        const NodeSweep sweep = sweep_nodes(rs.ensemble, rs.theta0);
        const double mean_sq = sweep.sum_sq_grad / rs.n_nodes;
        rs.snr_value_db = snr_db(rs.energy, rs.noise, mean_sq, rs.channel,
                                 rs.n_nodes, rs.dim);
    } catch (const UndefinedSnrError&) {
        rs.notes.push_back("snr undefined at the start point (zero noise or "
                           "zero signal power)");
    }

    return rs;
}

// ===== bound columns =====

namespace {

std::vector<double> nan_column(int k_max) {
    return std::vector<double>(static_cast<std::size_t>(k_max) + 1, kNaN);
}

std::vector<double> try_curve(BoundKind kind, int k_max, const BoundInputs& in,
                              std::vector<std::string>& notes) {
    try {
        return bound_curve(kind, k_max, in);
    } catch (const Error& e) {
        notes.push_back(std::string(to_string(kind)) + " not emitted: " + e.what());
        return nan_column(k_max);
    }
}

}  // namespace

BoundColumns compute_bound_columns(const ResolvedScenario& rs) {
    const int k_max = rs.cfg.k_max;
    BoundColumns out;
    out.thm1 = nan_column(k_max);
    out.thm2a = nan_column(k_max);
    out.thm2b = nan_column(k_max);
    out.central = nan_column(k_max);

    if (!rs.cfg.bounds_emit) return out;
    if (rs.cfg.algorithm == AlgorithmKind::fdm) {
        out.notes.push_back("bounds not emitted: the orthogonal baseline has "
                            "no over-the-air bound");
        return out;
    }
    if (rs.cfg.loss_kind == LossKindCfg::localization) {
        out.notes.push_back("bounds not emitted: nonconvex objective");
        return out;
    }
    if (!rs.has_constants) {
        out.notes.push_back("bounds not emitted: no curvature constants");
        return out;
    }

    BoundInputs in;
    in.beta = rs.beta;
    in.consts = rs.consts;
    in.moments = rs.moments;
    in.sigma_w_sq = rs.cfg.sigma_w_sq;
    in.n_nodes = rs.n_nodes;
    in.e_n = rs.e_n;
    in.dim = rs.dim;
    in.b_n = std::isnan(rs.b_n) ? 0.0 : rs.b_n;
    in.force_uncertified = rs.cfg.bounds_force;

    if (rs.cfg.algorithm == AlgorithmKind::gbma) {
        out.thm1 = try_curve(BoundKind::kStronglyConvex, k_max, in, out.notes);
        if (rs.moments.sigma_h_sq == 0.0) {
            out.thm2a = try_curve(BoundKind::kConvexEqualGain, k_max, in, out.notes);
        } else {
            out.thm2b = try_curve(BoundKind::kConvexFading, k_max, in, out.notes);
        }
    }
    // the exact-gradient reference bound rides along for both algorithms
    if (rs.consts.mu > 0.0) {
        out.central = try_curve(BoundKind::kCentralStrong, k_max, in, out.notes);
    } else {
        out.central = try_curve(BoundKind::kCentralConvex, k_max, in, out.notes);
    }
    return out;
}

// ===== artifacts =====

const char* const kCurveCsvHeader =
    "k,excess_mean,excess_se,r_sq_mean,bound_thm1,bound_thm2a,bound_thm2b,"
    "bound_central,energy_cum";

namespace {

void append_cell(std::string& out, double v) {
    out += ',';
    if (!std::isnan(v)) out += format_number(v);
}

double column_at(const std::vector<double>& col, std::size_t k) {
    return k < col.size() ? col[k] : kNaN;
}

}  // namespace

std::string render_curve_csv(const CurveStats& stats, const BoundColumns& bounds) {
    std::string out(kCurveCsvHeader);
    out += '\n';
    for (std::size_t k = 0; k < stats.excess_mean.size(); ++k) {
        out += std::to_string(k);
        append_cell(out, stats.excess_mean[k]);
        append_cell(out, stats.excess_se[k]);
        append_cell(out, stats.r_sq_mean[k]);
        append_cell(out, column_at(bounds.thm1, k));
        append_cell(out, column_at(bounds.thm2a, k));
        append_cell(out, column_at(bounds.thm2b, k));
        append_cell(out, column_at(bounds.central, k));
        append_cell(out, stats.energy_cum_mean[k]);
        out += '\n';
    }
    return out;
}

std::string render_bounds_csv(const BoundColumns& bounds) {
    std::string out("k,bound_thm1,bound_thm2a,bound_thm2b,bound_central");
    out += '\n';
    const std::size_t rows = bounds.thm1.size();
    for (std::size_t k = 0; k < rows; ++k) {
        out += std::to_string(k);
        append_cell(out, column_at(bounds.thm1, k));
        append_cell(out, column_at(bounds.thm2a, k));
        append_cell(out, column_at(bounds.thm2b, k));
        append_cell(out, column_at(bounds.central, k));
        out += '\n';
    }
    return out;
}

std::string render_manifest(const ResolvedScenario& rs,
                            const std::vector<std::string>& extra_notes) {
    std::string out;
    out += "# run manifest: reparseable config; '#' lines record resolved values\n";
    out += "# nodes = " + std::to_string(rs.n_nodes) +
           ", dim = " + std::to_string(rs.dim) + "\n";
    if (rs.has_constants) {
        out += "# mu = " + format_number(rs.consts.mu) +
               ", L = " + format_number(rs.consts.L) +
               ", L_bar = " + format_number(rs.consts.L_bar) +
               ", certified = " + (rs.consts.certified ? "true" : "false") + "\n";
        out += "# delta = " + format_number(rs.consts.delta) +
               ", r0_sq = " + format_number(rs.consts.r0_sq) + "\n";
    }
    out += "# mu_h = " + format_number(rs.moments.mu_h) +
           ", sigma_h_sq = " + format_number(rs.moments.sigma_h_sq) + "\n";
    out += "# beta = " + format_number(rs.beta) + "\n";
    if (!std::isnan(rs.rate_c)) {
        out += "# rate_c = " + format_number(rs.rate_c) + "\n";
    }
    out += "# E_N = " + format_number(rs.e_n) +
           ", effective_sigma = " + format_number(rs.effective_sigma) + "\n";
    if (!std::isnan(rs.b_n)) {
        out += "# gradient_power_bound = " + format_number(rs.b_n) + "\n";
    }
    out += "# f_star = " + format_number(rs.ref.f_star) + "\n";
    if (!std::isnan(rs.snr_value_db)) {
        out += "# snr_db = " + format_number(rs.snr_value_db) + "\n";
    }
    for (const auto& note : rs.notes) out += "# note: " + note + "\n";
    for (const auto& note : extra_notes) out += "# note: " + note + "\n";
    out += render_scenario(rs.cfg).serialize();
    return out;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot replace " + path + ": " + ec.message());
    }
}

// ===== full pipeline =====

ScenarioOutputs run_scenario(const ScenarioConfig& cfg) {
    ResolvedScenario rs = resolve_scenario(cfg);

    RunConfig rc;
    rc.beta = rs.beta;
    rc.k_max = cfg.k_max;
    rc.theta0 = rs.theta0;
    rc.guard.enabled = cfg.guard;
    rc.guard.norm_limit = cfg.guard_norm;
    rc.guard.excess_limit = cfg.guard_excess;
    rc.projection.enabled = cfg.projection;
    if (cfg.projection) {
        rc.projection.center = rs.theta0;
        rc.projection.radius = cfg.projection_radius;
    }

    ReplicationFn fn;
    switch (cfg.algorithm) {
        case AlgorithmKind::gbma:
            fn = [&rs, rc](std::uint64_t seed) mutable {
                rc.seed = seed;
                return run_gbma(rs.ensemble, rs.channel, rs.noise, rs.energy, rc,
                                rs.ref);
            };
            break;
        case AlgorithmKind::centralized:
            fn = [&rs, rc](std::uint64_t seed) mutable {
                rc.seed = seed;
                return run_centralized(rs.ensemble, rc, rs.ref);
            };
            break;
        case AlgorithmKind::fdm:
            fn = [&rs, rc, &cfg](std::uint64_t seed) mutable {
                rc.seed = seed;
                return run_fdm(rs.ensemble, rs.noise, cfg.fdm_energy, rc, rs.ref);
            };
            break;
    }

    MonteCarloResult mc = monte_carlo(fn, cfg.reps, cfg.seed);

    ScenarioOutputs out;
    out.stats = mc.stats;
    out.n_nodes = rs.n_nodes;
    out.divergences = mc.stats.diverged;
    if (out.divergences > 0) {
        out.notes.push_back(std::to_string(out.divergences) + " of " +
                            std::to_string(cfg.reps) +
                            " replications tripped the divergence guard");
        out.exit_code = 1;
    }

    if (cfg.validate_moments) {
        out.validators_requested = true;
        const auto mean_report =
            validate_mean_v(rs.ensemble, rs.channel, rs.noise, rs.energy,
                            rs.theta0, cfg.validator_draws, cfg.seed);
        const auto second_report =
            validate_second_moment_v(rs.ensemble, rs.channel, rs.noise, rs.energy,
                                     rs.theta0, cfg.validator_draws, cfg.seed);
        out.validators_pass = mean_report.pass && second_report.pass;
        out.notes.push_back(
            "mean validator: max |z| = " + format_number(mean_report.max_abs_z) +
            (mean_report.pass ? " (pass)" : " (FAIL)"));
        out.notes.push_back("second-moment validator: rel err = " +
                            format_number(second_report.rel_err) +
                            (second_report.pass ? " (pass)" : " (FAIL)"));
        if (!out.validators_pass) out.exit_code = 1;
    }

    const BoundColumns bounds = compute_bound_columns(rs);
    for (const auto& note : bounds.notes) out.notes.push_back(note);

    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    out.csv_path = (dir / (cfg.output_name + ".csv")).string();
    out.manifest_path = (dir / (cfg.output_name + ".manifest")).string();
    atomic_write_file(out.csv_path, render_curve_csv(mc.stats, bounds));
    atomic_write_file(out.manifest_path, render_manifest(rs, out.notes));
    out.mc = std::move(mc);
    return out;
}

}  // namespace gbma
