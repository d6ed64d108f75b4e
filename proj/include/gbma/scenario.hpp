#pragma once

// Turns a validated ScenarioConfig into runnable pieces (dataset, channel,
// constants, stepsize, reference point), executes the Monte Carlo study,
// and writes the two run artifacts: the per-iteration curve CSV and a
// reparseable manifest that freezes every resolved choice.

#include <string>
#include <vector>

#include "gbma/analysis.hpp"
#include "gbma/bounds.hpp"
#include "gbma/channel.hpp"
#include "gbma/config.hpp"
#include "gbma/model.hpp"
#include "gbma/sim.hpp"

namespace gbma {

// ===== config -> runnable pieces =====

FadingModel make_channel(const ScenarioConfig& cfg);
EnergySchedule make_energy(const ScenarioConfig& cfg);

struct ResolvedScenario {
    ScenarioConfig cfg;  // normalized copy (every applicable key explicit)
    LossEnsemble ensemble;
    FadingModel channel = FadingModel::unit();
    FadingMoments moments;
    NoiseModel noise;
    EnergySchedule energy = EnergySchedule::constant(1.0);
    ObjectiveConstants consts;  // certified (ridge) or surrogate / empty
    bool has_constants = false;
    Reference ref;
    ParamVec theta0;
    int n_nodes = 0;
    int dim = 0;
    double beta = 0.0;           // resolved stepsize
    double e_n = 0.0;            // per-node energy at this N
    double effective_sigma = 0.0;  // aggregate noise sigma of the shared slot
    double rate_c = 0.0;         // contraction factor; NaN when undefined
    double b_n = 0.0;            // gradient-power bound; NaN when unused
    double snr_value_db = 0.0;   // operating SNR at theta0; NaN when undefined
    std::vector<std::string> notes;
};

ResolvedScenario resolve_scenario(const ScenarioConfig& cfg);

// ===== bound columns =====

// One value per k = 0..k_max; NaN marks an empty CSV cell.  Infeasible or
// inapplicable bounds yield all-NaN columns plus a human-readable note.
struct BoundColumns {
    std::vector<double> thm1;
    std::vector<double> thm2a;
    std::vector<double> thm2b;
    std::vector<double> central;
    std::vector<std::string> notes;
};

BoundColumns compute_bound_columns(const ResolvedScenario& rs);

// ===== artifacts =====

// Pinned column set of the per-iteration curve file.
extern const char* const kCurveCsvHeader;

std::string render_curve_csv(const CurveStats& stats, const BoundColumns& bounds);
std::string render_bounds_csv(const BoundColumns& bounds);
std::string render_manifest(const ResolvedScenario& rs,
                            const std::vector<std::string>& extra_notes);

// Writes via a temp file in the destination directory plus an atomic
// rename, so a crash never leaves a half-written artifact behind.
void atomic_write_file(const std::string& path, const std::string& content);

// ===== full pipeline =====

struct ScenarioOutputs {
    std::string csv_path;
    std::string manifest_path;
    CurveStats stats;
    MonteCarloResult mc;  // full traces, for downstream energy accounting
    int n_nodes = 0;
    int divergences = 0;
    bool validators_requested = false;
    bool validators_pass = true;
    std::vector<std::string> notes;
    int exit_code = 0;  // 0 clean; 1 divergence or failed validator
};

ScenarioOutputs run_scenario(const ScenarioConfig& cfg);

}  // namespace gbma
