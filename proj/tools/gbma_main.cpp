// Command-line front end: run scenario configs or canned preset families,
// dry-run feasibility reports, bound-curve emission, and one-key sweeps.
//
// Exit codes: 0 clean run; 1 runtime failure (divergence, failed validator);
// 2 bad usage or an invalid / infeasible configuration.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gbma/presets.hpp"
#include "gbma/scenario.hpp"

namespace {

using namespace gbma;

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' ||
                        c == '_';
        if (!ok) c = '_';
    }
    return out;
}

void print_run(const ScenarioOutputs& out) {
    std::cout << "replications: " << out.stats.completed << " completed, "
              << out.stats.diverged << " diverged\n";
    for (const auto& note : out.notes) std::cout << "note: " << note << "\n";
    std::cout << "wrote " << out.csv_path << "\n";
    std::cout << "wrote " << out.manifest_path << "\n";
}

int do_run(const std::string& config_path) {
    const ScenarioConfig cfg = scenario_from_doc(ConfigDoc::parse_file(config_path));
    const ScenarioOutputs out = run_scenario(cfg);
    print_run(out);
    return out.exit_code;
}

int do_preset_list() {
    for (const Preset& p : all_presets()) {
        std::cout << p.name << "  " << p.summary << "\n";
    }
    return 0;
}

int do_preset(const std::string& name, const std::string& out_dir) {
    const Preset* p = find_preset(name);
    if (p == nullptr) {
        throw ConfigError("unknown preset '" + name + "' (try --list)");
    }
    std::cout << "preset " << p->name << ": " << p->summary << "\n";
    const PresetOutputs outs = run_preset(*p, out_dir);
    for (const auto& run : outs.runs) print_run(run);
    if (!outs.energy_csv_path.empty()) {
        std::cout << "wrote " << outs.energy_csv_path << "\n";
    }
    return outs.exit_code;
}

int do_validate(const std::string& config_path) {
    const ScenarioConfig cfg = scenario_from_doc(ConfigDoc::parse_file(config_path));
    const ResolvedScenario rs = resolve_scenario(cfg);

    std::cout << "nodes = " << rs.n_nodes << ", dim = " << rs.dim << "\n";
    if (rs.has_constants) {
        std::cout << "mu = " << format_number(rs.consts.mu)
                  << ", L = " << format_number(rs.consts.L)
                  << ", L_bar = " << format_number(rs.consts.L_bar)
                  << ", certified = " << (rs.consts.certified ? "true" : "false")
                  << "\n";
        std::cout << "delta = " << format_number(rs.consts.delta)
                  << ", r0_sq = " << format_number(rs.consts.r0_sq) << "\n";
    } else {
        std::cout << "no curvature constants (nonconvex loss without "
                     "surrogates)\n";
    }
    std::cout << "channel: " << rs.channel.describe()
              << "  mu_h = " << format_number(rs.moments.mu_h)
              << ", sigma_h_sq = " << format_number(rs.moments.sigma_h_sq) << "\n";
    std::cout << "energy: " << rs.energy.describe()
              << "  E_N = " << format_number(rs.e_n)
              << ", effective_sigma = " << format_number(rs.effective_sigma)
              << "\n";
    std::cout << "beta = " << format_number(rs.beta) << "\n";
    if (!std::isnan(rs.rate_c)) {
        std::cout << "rate_c = " << format_number(rs.rate_c) << "\n";
    }

    if (rs.has_constants) {
        const struct {
            const char* name;
            bool strong;
            bool equal;
        } designers[] = {{"designer strongly_convex", true, false},
                         {"designer convex_equal", false, true},
                         {"designer convex_fading", false, false}};
        for (const auto& d : designers) {
            std::cout << d.name << ": ";
            try {
                const double b =
                    d.strong ? design_stepsize_strongly_convex(
                                   rs.consts, rs.moments, rs.n_nodes, cfg.safety)
                             : design_stepsize_convex(rs.consts, rs.moments,
                                                      d.equal, cfg.safety);
                std::cout << "beta <= " << format_number(b) << "\n";
            } catch (const Error& e) {
                std::cout << "infeasible (" << e.what() << ")\n";
            }
        }
    }
    if (!std::isnan(rs.snr_value_db)) {
        std::cout << "snr_db = " << format_number(rs.snr_value_db) << "\n";
    } else {
        std::cout << "snr_db = undefined\n";
    }
    for (const auto& note : rs.notes) std::cout << "note: " << note << "\n";
    return 0;
}

int do_bounds(const std::string& config_path) {
    const ScenarioConfig cfg = scenario_from_doc(ConfigDoc::parse_file(config_path));
    ScenarioConfig with_bounds = cfg;
    with_bounds.bounds_emit = true;
    const ResolvedScenario rs = resolve_scenario(with_bounds);
    const BoundColumns cols = compute_bound_columns(rs);
    for (const auto& note : cols.notes) std::cout << "note: " << note << "\n";
    namespace fs = std::filesystem;
    const std::string path =
        (fs::path(cfg.output_dir) / (cfg.output_name + "_bounds.csv")).string();
    atomic_write_file(path, render_bounds_csv(cols));
    std::cout << "wrote " << path << "\n";
    return 0;
}

int do_sweep(const std::string& config_path, const std::string& key,
             const std::vector<std::string>& values) {
    const ConfigDoc base = ConfigDoc::parse_file(config_path);
    int exit_code = 0;
    for (const std::string& value : values) {
        ConfigDoc doc = base;
        doc.set(key, value);
        ScenarioConfig cfg = scenario_from_doc(doc);
        cfg.output_name += "_" + sanitize(value);
        std::cout << "sweep " << key << " = " << value << "\n";
        const ScenarioOutputs out = run_scenario(cfg);
        print_run(out);
        if (out.exit_code > exit_code) exit_code = out.exit_code;
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"over-the-air gradient descent simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string preset_name;
    std::string out_dir;
    std::string sweep_key;
    std::vector<std::string> sweep_values;
    bool list_presets = false;

    CLI::App* run_cmd =
        app.add_subcommand("run", "run a scenario config; writes CSV + manifest");
    run_cmd->add_option("config", config_path, "config file")->required();

    CLI::App* preset_cmd =
        app.add_subcommand("preset", "run a named scenario family");
    preset_cmd->add_option("name", preset_name, "preset name");
    preset_cmd->add_flag("--list", list_presets, "list available presets");
    preset_cmd->add_option("--out", out_dir, "override the output directory");

    CLI::App* validate_cmd = app.add_subcommand(
        "validate", "dry-run report: constants, feasibility, SNR");
    validate_cmd->add_option("config", config_path, "config file")->required();

    CLI::App* bounds_cmd =
        app.add_subcommand("bounds", "emit the closed-form bound curves only");
    bounds_cmd->add_option("config", config_path, "config file")->required();

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "re-run a config over values of one key");
    sweep_cmd->add_option("config", config_path, "config file")->required();
    sweep_cmd->add_option("--param", sweep_key, "config key to vary")->required();
    sweep_cmd->add_option("--values", sweep_values, "values to substitute")
        ->required()
        ->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run_cmd->parsed()) return do_run(config_path);
        if (preset_cmd->parsed()) {
            if (list_presets || preset_name.empty()) return do_preset_list();
            return do_preset(preset_name, out_dir);
        }
        if (validate_cmd->parsed()) return do_validate(config_path);
        if (bounds_cmd->parsed()) return do_bounds(config_path);
        if (sweep_cmd->parsed()) return do_sweep(config_path, sweep_key, sweep_values);
    } catch (const gbma::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::FormatError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::IoError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::ConstantsError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::InfeasibleStepsizeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::UndefinedSnrError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gbma::Error& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
