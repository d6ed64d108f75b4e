#pragma once

// Flat `section.key = value` config files: parsing, typed access, and the
// scenario schema the CLI and presets share.  Unknown keys are hard errors,
// and so are keys that do not apply to the selected kinds -- a config either
// describes exactly one runnable scenario or it is rejected.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gbma/datasets.hpp"
#include "gbma/errors.hpp"

namespace gbma {

// ===== raw document =====

// Ordered key/value store.  Parsing enforces one `key = value` per line,
// '#' comments, and no duplicate keys; serialization round-trips numbers
// through shortest-form to_chars so a rendered manifest reparses bit-exact.
class ConfigDoc {
public:
    static ConfigDoc parse(const std::string& text);
    static ConfigDoc parse_file(const std::string& path);

    std::string serialize() const;

    bool has(const std::string& key) const;
    const std::string& raw(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    void set_number(const std::string& key, double value);
    void set_int(const std::string& key, long long value);
    void set_u64(const std::string& key, std::uint64_t value);
    void set_bool(const std::string& key, bool value);

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

std::string format_number(double value);  // shortest round-trip decimal

// Typed getters that remember which keys were read, so a schema pass can
// reject everything left over.
class ConfigReader {
public:
    explicit ConfigReader(ConfigDoc doc) : doc_(std::move(doc)) {}

    bool has(const std::string& key) const { return doc_.has(key); }

    std::string require_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    double require_number(const std::string& key);
    double get_number(const std::string& key, double fallback);
    long long require_int(const std::string& key);
    long long get_int(const std::string& key, long long fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);

    // Throws ConfigError naming every key that no getter consumed.
    void expect_all_consumed() const;

private:
    ConfigDoc doc_;  // owned copy: readers must not outlive-depend on the source
    std::map<std::string, bool> consumed_;
};

// ===== scenario schema =====

enum class LossKindCfg { ridge_synthetic, ridge_csv, localization };
enum class ChannelKindCfg { unit, rayleigh, uniform, lognormal };
enum class EnergyKindCfg { constant, power_law, exponent };
enum class AlgorithmKind { gbma, centralized, fdm };
enum class BetaMode { number, auto_strong, auto_convex_equal, auto_convex_fading };

std::string to_string(LossKindCfg kind);
std::string to_string(ChannelKindCfg kind);
std::string to_string(EnergyKindCfg kind);
std::string to_string(AlgorithmKind kind);
std::string to_string(BetaMode mode);

struct ScenarioConfig {
    // loss.*
    LossKindCfg loss_kind = LossKindCfg::ridge_synthetic;
    SyntheticRidgeSpec ridge;
    YearCsvSpec csv;
    LocalizationFieldSpec field;
    bool has_surrogate = false;  // loss.mu / loss.L / loss.L_bar, all or none
    double surrogate_mu = 0.0;
    double surrogate_L = 0.0;
    double surrogate_L_bar = 0.0;

    // channel.*
    ChannelKindCfg channel_kind = ChannelKindCfg::unit;
    double channel_scale = 1.0;    // rayleigh
    double channel_mu_h = 1.0;     // uniform / lognormal
    double channel_var = 0.0;      // uniform / lognormal
    double channel_phase_max = 0.0;  // > 0 wraps the model in a phase residual

    // noise.* and energy.*
    double sigma_w_sq = 0.0;
    EnergyKindCfg energy_kind = EnergyKindCfg::constant;
    double energy_value = 1.0;    // const
    double energy_epsilon = 1.0;  // powerlaw
    double energy_p = 0.0;        // exponent

    // run.*
    AlgorithmKind algorithm = AlgorithmKind::gbma;
    BetaMode beta_mode = BetaMode::auto_strong;
    double beta_value = 0.0;  // beta_mode == number
    double safety = 0.9;      // auto modes only
    int k_max = 0;
    std::uint64_t seed = 1;
    int reps = 200;
    bool delta_auto = true;
    double delta_value = 0.0;
    bool theta0_zero = true;
    Eigen::VectorXd theta0_list;
    bool projection = false;
    double projection_radius = 0.0;
    bool guard = true;
    double guard_norm = 1e8;
    double guard_excess = 1e12;
    double fdm_energy = 1.0;  // per-node energy of the orthogonal baseline

    // bounds.*
    bool bounds_emit = true;
    bool bounds_force = false;
    bool bounds_b_auto = true;  // estimate the gradient-power bound by probing
    double bounds_b = 0.0;
    double probe_radius = 0.0;  // 0 -> derived from the initial distance
    int probe_samples = 64;

    // validators.*
    bool validate_moments = false;
    int validator_draws = 4000;

    // output.*
    std::string output_dir = "out";
    std::string output_name = "run";
};

// Schema pass: typed extraction plus cross-field validation.  Rejects keys
// that are unknown or that do not apply to the selected kinds.
ScenarioConfig scenario_from_doc(const ConfigDoc& doc);

// Inverse of scenario_from_doc: emits exactly the applicable keys, in a
// stable order, such that scenario_from_doc(render_scenario(cfg)) == cfg.
ConfigDoc render_scenario(const ScenarioConfig& cfg);

}  // namespace gbma
