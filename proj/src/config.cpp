#include "gbma/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gbma {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

bool try_parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out, std::chars_format::general);
    return ec == std::errc() && p == e;
}

bool try_parse_int(const std::string& s, long long& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out, 10);
    return ec == std::errc() && p == e;
}

bool try_parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out, 10);
    return ec == std::errc() && p == e;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* wanted) {
    throw ConfigError("key '" + key + "': expected " + wanted + ", got '" +
                      value + "'");
}

}  // namespace

// ===== document =====

ConfigDoc ConfigDoc::parse(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": malformed key '" + key + "'");
        }
        if (doc.has(key)) {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": duplicate key '" + key + "'");
        }
        doc.set(key, value);
    }
    return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string ConfigDoc::serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

bool ConfigDoc::has(const std::string& key) const {
    return index_.count(key) != 0;
}

const std::string& ConfigDoc::raw(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ConfigError("missing required key '" + key + "'");
    return entries_[it->second].second;
}

void ConfigDoc::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
        return;
    }
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
}

void ConfigDoc::set_number(const std::string& key, double value) {
    set(key, format_number(value));
}

void ConfigDoc::set_int(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

void ConfigDoc::set_u64(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

void ConfigDoc::set_bool(const std::string& key, bool value) {
    set(key, value ? "true" : "false");
}

std::string format_number(double value) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return std::string(buf, p);
}

// ===== typed reader =====

std::string ConfigReader::require_string(const std::string& key) {
    const std::string& v = doc_.raw(key);
    consumed_[key] = true;
    return v;
}

std::string ConfigReader::get_string(const std::string& key,
                                     const std::string& fallback) {
    if (!doc_.has(key)) return fallback;
    return require_string(key);
}

double ConfigReader::require_number(const std::string& key) {
    const std::string v = require_string(key);
    double out;
    if (!try_parse_number(v, out)) bad_value(key, v, "a number");
    return out;
}

double ConfigReader::get_number(const std::string& key, double fallback) {
    if (!doc_.has(key)) return fallback;
    return require_number(key);
}

long long ConfigReader::require_int(const std::string& key) {
    const std::string v = require_string(key);
    long long out;
    if (!try_parse_int(v, out)) bad_value(key, v, "an integer");
    return out;
}

long long ConfigReader::get_int(const std::string& key, long long fallback) {
    if (!doc_.has(key)) return fallback;
    return require_int(key);
}

std::uint64_t ConfigReader::get_u64(const std::string& key,
                                    std::uint64_t fallback) {
    if (!doc_.has(key)) return fallback;
    const std::string v = require_string(key);
    std::uint64_t out;
    if (!try_parse_u64(v, out)) bad_value(key, v, "an unsigned integer");
    return out;
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) {
    if (!doc_.has(key)) return fallback;
    const std::string v = require_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

void ConfigReader::expect_all_consumed() const {
    std::string leftovers;
    for (const auto& [key, value] : doc_.entries()) {
        (void)value;
        if (!consumed_.count(key)) {
            if (!leftovers.empty()) leftovers += ", ";
            leftovers += key;
        }
    }
    if (!leftovers.empty()) {
        throw ConfigError(
            "unrecognized key(s) for this configuration: " + leftovers);
    }
}

// ===== enum names =====

std::string to_string(LossKindCfg kind) {
    switch (kind) {
        case LossKindCfg::ridge_synthetic: return "ridge_synthetic";
        case LossKindCfg::ridge_csv: return "ridge_csv";
        case LossKindCfg::localization: return "localization";
    }
    return "?";
}

std::string to_string(ChannelKindCfg kind) {
    switch (kind) {
        case ChannelKindCfg::unit: return "unit";
        case ChannelKindCfg::rayleigh: return "rayleigh";
        case ChannelKindCfg::uniform: return "uniform";
        case ChannelKindCfg::lognormal: return "lognormal";
    }
    return "?";
}

std::string to_string(EnergyKindCfg kind) {
    switch (kind) {
        case EnergyKindCfg::constant: return "const";
        case EnergyKindCfg::power_law: return "powerlaw";
        case EnergyKindCfg::exponent: return "exponent";
    }
    return "?";
}

std::string to_string(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::gbma: return "gbma";
        case AlgorithmKind::centralized: return "centralized";
        case AlgorithmKind::fdm: return "fdm";
    }
    return "?";
}

std::string to_string(BetaMode mode) {
    switch (mode) {
        case BetaMode::number: return "number";
        case BetaMode::auto_strong: return "auto_strong";
        case BetaMode::auto_convex_equal: return "auto_convex_equal";
        case BetaMode::auto_convex_fading: return "auto_convex_fading";
    }
    return "?";
}

// ===== schema =====

namespace {

LossKindCfg parse_loss_kind(const std::string& v) {
    if (v == "ridge_synthetic") return LossKindCfg::ridge_synthetic;
    if (v == "ridge_csv") return LossKindCfg::ridge_csv;
    if (v == "localization") return LossKindCfg::localization;
    throw ConfigError("loss.kind: unknown kind '" + v +
                      "' (expected ridge_synthetic, ridge_csv, or localization)");
}

ChannelKindCfg parse_channel_kind(const std::string& v) {
    if (v == "unit") return ChannelKindCfg::unit;
    if (v == "rayleigh") return ChannelKindCfg::rayleigh;
    if (v == "uniform") return ChannelKindCfg::uniform;
    if (v == "lognormal") return ChannelKindCfg::lognormal;
    throw ConfigError("channel.kind: unknown kind '" + v +
                      "' (expected unit, rayleigh, uniform, or lognormal)");
}

EnergyKindCfg parse_energy_kind(const std::string& v) {
    if (v == "const") return EnergyKindCfg::constant;
    if (v == "powerlaw") return EnergyKindCfg::power_law;
    if (v == "exponent") return EnergyKindCfg::exponent;
    throw ConfigError("energy.kind: unknown kind '" + v +
                      "' (expected const, powerlaw, or exponent)");
}

AlgorithmKind parse_algorithm(const std::string& v) {
    if (v == "gbma") return AlgorithmKind::gbma;
    if (v == "centralized") return AlgorithmKind::centralized;
    if (v == "fdm") return AlgorithmKind::fdm;
    throw ConfigError("run.algorithm: unknown algorithm '" + v +
                      "' (expected gbma, centralized, or fdm)");
}

int checked_count(long long v, const char* key) {
    if (v < 1 || v > (1LL << 30)) {
        throw ConfigError(std::string(key) + ": expected a positive count, got " +
                          std::to_string(v));
    }
    return static_cast<int>(v);
}

Eigen::VectorXd parse_number_list(const std::string& key, const std::string& v) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= v.size()) {
        std::size_t comma = v.find(',', start);
        if (comma == std::string::npos) comma = v.size();
        const std::string cell = trim(v.substr(start, comma - start));
        double x;
        if (!try_parse_number(cell, x)) {
            bad_value(key, v, "'zero' or a comma-separated list of numbers");
        }
        vals.push_back(x);
        start = comma + 1;
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = vals[i];
    }
    return out;
}

std::string join_numbers(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += format_number(v[i]);
    }
    return out;
}

}  // namespace

ScenarioConfig scenario_from_doc(const ConfigDoc& doc) {
    ConfigReader r(doc);
    ScenarioConfig cfg;

    // ----- loss -----
    cfg.loss_kind = parse_loss_kind(r.require_string("loss.kind"));
    switch (cfg.loss_kind) {
        case LossKindCfg::ridge_synthetic: {
            cfg.ridge.n_nodes =
                checked_count(r.get_int("loss.n", cfg.ridge.n_nodes), "loss.n");
            cfg.ridge.dim =
                checked_count(r.get_int("loss.d", cfg.ridge.dim), "loss.d");
            cfg.ridge.lambda = r.get_number("loss.lambda", cfg.ridge.lambda);
            cfg.ridge.conditioning =
                r.get_number("loss.conditioning", cfg.ridge.conditioning);
            cfg.ridge.noise_std = r.get_number("loss.noise_std", cfg.ridge.noise_std);
            cfg.ridge.theta_scale =
                r.get_number("loss.theta_scale", cfg.ridge.theta_scale);
            cfg.ridge.seed = r.get_u64("loss.data_seed", cfg.ridge.seed);
            break;
        }
        case LossKindCfg::ridge_csv: {
            cfg.csv.path = r.require_string("loss.csv_path");
            const long long limit = r.get_int("loss.csv_limit", cfg.csv.limit);
            if (limit < 0) {
                throw ConfigError("loss.csv_limit: expected a nonnegative count");
            }
            cfg.csv.limit = static_cast<int>(limit);
            cfg.csv.standardize = r.get_bool("loss.standardize", cfg.csv.standardize);
            cfg.csv.lambda = r.get_number("loss.lambda", cfg.csv.lambda);
            break;
        }
        case LossKindCfg::localization: {
            cfg.field.n_nodes =
                checked_count(r.get_int("loss.n", cfg.field.n_nodes), "loss.n");
            cfg.field.field_size =
                r.get_number("loss.field_size", cfg.field.field_size);
            cfg.field.source[0] = r.get_number("loss.source_x", cfg.field.source[0]);
            cfg.field.source[1] = r.get_number("loss.source_y", cfg.field.source[1]);
            cfg.field.exclusion_radius =
                r.get_number("loss.exclusion_radius", cfg.field.exclusion_radius);
            cfg.field.strength = r.get_number("loss.strength", cfg.field.strength);
            cfg.field.snr_db = r.get_number("loss.snr_db", cfg.field.snr_db);
            cfg.field.guard_radius =
                r.get_number("loss.guard_radius", cfg.field.guard_radius);
            cfg.field.seed = r.get_u64("loss.data_seed", cfg.field.seed);
            // curvature surrogates: the nonconvex loss has no certified
            // constants, so stepsize design and bound evaluation need these
            const bool any = r.has("loss.mu") || r.has("loss.L") || r.has("loss.L_bar");
            if (any) {
                if (!(r.has("loss.mu") && r.has("loss.L") && r.has("loss.L_bar"))) {
                    throw ConfigError(
                        "loss.mu, loss.L, loss.L_bar: provide all three or none");
                }
                cfg.has_surrogate = true;
                cfg.surrogate_mu = r.require_number("loss.mu");
                cfg.surrogate_L = r.require_number("loss.L");
                cfg.surrogate_L_bar = r.require_number("loss.L_bar");
            }
            break;
        }
    }

    // ----- channel -----
    cfg.channel_kind = parse_channel_kind(r.get_string("channel.kind", "unit"));
    switch (cfg.channel_kind) {
        case ChannelKindCfg::unit:
            break;
        case ChannelKindCfg::rayleigh:
            cfg.channel_scale = r.get_number("channel.scale", cfg.channel_scale);
            break;
        case ChannelKindCfg::uniform:
        case ChannelKindCfg::lognormal:
            cfg.channel_mu_h = r.require_number("channel.mu_h");
            cfg.channel_var = r.get_number("channel.sigma_h_sq", 0.0);
            break;
    }
    cfg.channel_phase_max = r.get_number("channel.phase_max", 0.0);

    // ----- noise + energy -----
    cfg.sigma_w_sq = r.get_number("noise.sigma_w_sq", 0.0);
    if (!(cfg.sigma_w_sq >= 0.0)) {
        throw ConfigError("noise.sigma_w_sq: expected a nonnegative variance");
    }
    cfg.energy_kind = parse_energy_kind(r.get_string("energy.kind", "const"));
    switch (cfg.energy_kind) {
        case EnergyKindCfg::constant:
            cfg.energy_value = r.get_number("energy.value", cfg.energy_value);
            break;
        case EnergyKindCfg::power_law:
            cfg.energy_epsilon = r.require_number("energy.epsilon");
            break;
        case EnergyKindCfg::exponent:
            cfg.energy_p = r.require_number("energy.p");
            break;
    }

    // ----- run -----
    cfg.algorithm = parse_algorithm(r.get_string("run.algorithm", "gbma"));
    const std::string beta = r.require_string("run.beta");
    if (beta == "auto_strong") {
        cfg.beta_mode = BetaMode::auto_strong;
    } else if (beta == "auto_convex_equal") {
        cfg.beta_mode = BetaMode::auto_convex_equal;
    } else if (beta == "auto_convex_fading") {
        cfg.beta_mode = BetaMode::auto_convex_fading;
    } else {
        double b;
        if (!try_parse_number(beta, b)) {
            bad_value("run.beta", beta,
                      "a number or one of auto_strong, auto_convex_equal, "
                      "auto_convex_fading");
        }
        if (!(b > 0.0)) throw ConfigError("run.beta: expected a positive stepsize");
        cfg.beta_mode = BetaMode::number;
        cfg.beta_value = b;
    }
    if (cfg.beta_mode != BetaMode::number) {
        cfg.safety = r.get_number("run.safety", cfg.safety);
    }
    cfg.k_max = checked_count(r.require_int("run.k_max"), "run.k_max");
    cfg.seed = r.get_u64("run.seed", cfg.seed);
    cfg.reps = checked_count(r.get_int("run.reps", cfg.reps), "run.reps");
    const std::string delta = r.get_string("run.delta", "auto");
    if (delta == "auto") {
        cfg.delta_auto = true;
    } else {
        double d;
        if (!try_parse_number(delta, d)) {
            bad_value("run.delta", delta, "'auto' or a positive number");
        }
        cfg.delta_auto = false;
        cfg.delta_value = d;
    }
    const std::string theta0 = r.get_string("run.theta0", "zero");
    if (theta0 == "zero") {
        cfg.theta0_zero = true;
    } else {
        cfg.theta0_zero = false;
        cfg.theta0_list = parse_number_list("run.theta0", theta0);
    }
    cfg.projection = r.get_bool("run.projection", false);
    if (cfg.projection) {
        cfg.projection_radius = r.require_number("run.projection_radius");
        if (!(cfg.projection_radius > 0.0)) {
            throw ConfigError("run.projection_radius: expected a positive radius");
        }
    }
    cfg.guard = r.get_bool("run.guard", cfg.guard);
    if (cfg.guard) {
        cfg.guard_norm = r.get_number("run.guard_norm", cfg.guard_norm);
        cfg.guard_excess = r.get_number("run.guard_excess", cfg.guard_excess);
    }
    if (cfg.algorithm == AlgorithmKind::fdm) {
        cfg.fdm_energy = r.get_number("run.fdm_energy", cfg.fdm_energy);
        if (!(cfg.fdm_energy > 0.0)) {
            throw ConfigError("run.fdm_energy: expected a positive energy");
        }
    }

    // ----- bounds -----
    cfg.bounds_emit = r.get_bool("bounds.emit", cfg.bounds_emit);
    if (cfg.bounds_emit) {
        cfg.bounds_force = r.get_bool("bounds.force", cfg.bounds_force);
        if (r.has("bounds.b")) {
            cfg.bounds_b_auto = false;
            cfg.bounds_b = r.require_number("bounds.b");
            if (!(cfg.bounds_b >= 0.0)) {
                throw ConfigError("bounds.b: expected a nonnegative bound");
            }
        }
        cfg.probe_radius = r.get_number("bounds.probe_radius", cfg.probe_radius);
        cfg.probe_samples = checked_count(
            r.get_int("bounds.probe_samples", cfg.probe_samples),
            "bounds.probe_samples");
    }

    // ----- validators -----
    cfg.validate_moments = r.get_bool("validators.moments", false);
    if (cfg.validate_moments) {
        cfg.validator_draws = checked_count(
            r.get_int("validators.draws", cfg.validator_draws), "validators.draws");
    }

    // ----- output -----
    cfg.output_dir = r.get_string("output.dir", cfg.output_dir);
    cfg.output_name = r.get_string("output.name", cfg.output_name);

    r.expect_all_consumed();
    return cfg;
}

ConfigDoc render_scenario(const ScenarioConfig& cfg) {
    ConfigDoc doc;

    doc.set("loss.kind", to_string(cfg.loss_kind));
    switch (cfg.loss_kind) {
        case LossKindCfg::ridge_synthetic:
            doc.set_int("loss.n", cfg.ridge.n_nodes);
            doc.set_int("loss.d", cfg.ridge.dim);
            doc.set_number("loss.lambda", cfg.ridge.lambda);
            doc.set_number("loss.conditioning", cfg.ridge.conditioning);
            doc.set_number("loss.noise_std", cfg.ridge.noise_std);
            doc.set_number("loss.theta_scale", cfg.ridge.theta_scale);
            doc.set_u64("loss.data_seed", cfg.ridge.seed);
            break;
        case LossKindCfg::ridge_csv:
            doc.set("loss.csv_path", cfg.csv.path);
            doc.set_int("loss.csv_limit", cfg.csv.limit);
            doc.set_bool("loss.standardize", cfg.csv.standardize);
            doc.set_number("loss.lambda", cfg.csv.lambda);
            break;
        case LossKindCfg::localization:
            doc.set_int("loss.n", cfg.field.n_nodes);
            doc.set_number("loss.field_size", cfg.field.field_size);
            doc.set_number("loss.source_x", cfg.field.source[0]);
            doc.set_number("loss.source_y", cfg.field.source[1]);
            doc.set_number("loss.exclusion_radius", cfg.field.exclusion_radius);
            doc.set_number("loss.strength", cfg.field.strength);
            doc.set_number("loss.snr_db", cfg.field.snr_db);
            doc.set_number("loss.guard_radius", cfg.field.guard_radius);
            doc.set_u64("loss.data_seed", cfg.field.seed);
            if (cfg.has_surrogate) {
                doc.set_number("loss.mu", cfg.surrogate_mu);
                doc.set_number("loss.L", cfg.surrogate_L);
                doc.set_number("loss.L_bar", cfg.surrogate_L_bar);
            }
            break;
    }

    doc.set("channel.kind", to_string(cfg.channel_kind));
    switch (cfg.channel_kind) {
        case ChannelKindCfg::unit:
            break;
        case ChannelKindCfg::rayleigh:
            doc.set_number("channel.scale", cfg.channel_scale);
            break;
        case ChannelKindCfg::uniform:
        case ChannelKindCfg::lognormal:
            doc.set_number("channel.mu_h", cfg.channel_mu_h);
            doc.set_number("channel.sigma_h_sq", cfg.channel_var);
            break;
    }
    doc.set_number("channel.phase_max", cfg.channel_phase_max);

    doc.set_number("noise.sigma_w_sq", cfg.sigma_w_sq);
    doc.set("energy.kind", to_string(cfg.energy_kind));
    switch (cfg.energy_kind) {
        case EnergyKindCfg::constant:
            doc.set_number("energy.value", cfg.energy_value);
            break;
        case EnergyKindCfg::power_law:
            doc.set_number("energy.epsilon", cfg.energy_epsilon);
            break;
        case EnergyKindCfg::exponent:
            doc.set_number("energy.p", cfg.energy_p);
            break;
    }

    doc.set("run.algorithm", to_string(cfg.algorithm));
    if (cfg.beta_mode == BetaMode::number) {
        doc.set_number("run.beta", cfg.beta_value);
    } else {
        doc.set("run.beta", to_string(cfg.beta_mode));
        doc.set_number("run.safety", cfg.safety);
    }
    doc.set_int("run.k_max", cfg.k_max);
    doc.set_u64("run.seed", cfg.seed);
    doc.set_int("run.reps", cfg.reps);
    if (cfg.delta_auto) {
        doc.set("run.delta", "auto");
    } else {
        doc.set_number("run.delta", cfg.delta_value);
    }
    if (cfg.theta0_zero) {
        doc.set("run.theta0", "zero");
    } else {
        doc.set("run.theta0", join_numbers(cfg.theta0_list));
    }
    doc.set_bool("run.projection", cfg.projection);
    if (cfg.projection) {
        doc.set_number("run.projection_radius", cfg.projection_radius);
    }
    doc.set_bool("run.guard", cfg.guard);
    if (cfg.guard) {
        doc.set_number("run.guard_norm", cfg.guard_norm);
        doc.set_number("run.guard_excess", cfg.guard_excess);
    }
    if (cfg.algorithm == AlgorithmKind::fdm) {
        doc.set_number("run.fdm_energy", cfg.fdm_energy);
    }

    doc.set_bool("bounds.emit", cfg.bounds_emit);
    if (cfg.bounds_emit) {
        doc.set_bool("bounds.force", cfg.bounds_force);
        if (!cfg.bounds_b_auto) doc.set_number("bounds.b", cfg.bounds_b);
        doc.set_number("bounds.probe_radius", cfg.probe_radius);
        doc.set_int("bounds.probe_samples", cfg.probe_samples);
    }

    doc.set_bool("validators.moments", cfg.validate_moments);
    if (cfg.validate_moments) doc.set_int("validators.draws", cfg.validator_draws);

    doc.set("output.dir", cfg.output_dir);
    doc.set("output.name", cfg.output_name);

    return doc;
}

}  // namespace gbma
