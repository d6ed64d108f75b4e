#pragma once

/**
 * Dataset construction: deterministic synthetic generators for both loss
 * families, and a loader for the year-prediction CSV layout
 * (year,attr1..attr90 per row).
 */

#include <cstdint>
#include <string>

#include "gbma/model.hpp"

namespace gbma {

// Environment variable naming the directory that relative dataset paths
// are resolved against.
inline constexpr const char* kDataDirEnvVar = "GBMA_DATA_DIR";

// ========================== synthetic ridge =============================

struct SyntheticRidgeSpec {
    int n_nodes = 100;
    int dim = 10;
    std::uint64_t seed = 1;
    double conditioning = 1.0;  // target condition number of the Gram matrix
    double noise_std = 0.1;     // y = x' theta_true + Normal(0, noise_std^2)
    double lambda = 0.5;
    double theta_scale = 3.0;   // |theta_true|; 0 gives theta_true = 0
};

struct RidgeDataset {
    LossEnsemble ensemble;
    ParamVec theta_true;
};

// Features are i.i.d. centered normals with a geometric per-coordinate
// scale profile chosen so the Gram matrix approaches the requested
// condition number at large N; conditioning == 1 gives standard normals.
RidgeDataset gen_synthetic_ridge(const SyntheticRidgeSpec& spec);

// ======================== localization field ============================

struct LocalizationFieldSpec {
    int n_nodes = 200;
    double field_size = 100.0;        // sensors live in [0, field_size]^2
    Eigen::Vector2d source{60.0, 60.0};
    double exclusion_radius = 8.0;    // no sensor closer to the source
    double strength = 100.0;          // source constant A
    double snr_db = -10.0;            // +inf => noiseless measurements
    std::uint64_t seed = 1;
    double guard_radius = 1e-3;
};

struct LocalizationDataset {
    LossEnsemble ensemble;
    Eigen::Vector2d source;
    double measurement_noise_sigma = 0.0;
};

// Sensor positions are uniform over the field outside the exclusion disc;
// measurements are A/dist^2 plus Gaussian noise calibrated so that
// mean(signal^2)/noise_variance matches snr_db.
LocalizationDataset gen_localization_field(const LocalizationFieldSpec& spec);

// ========================== CSV year loader =============================

struct YearCsvSpec {
    std::string path;
    int limit = 0;            // keep the first `limit` rows; 0 = all
    bool standardize = true;  // per-feature zero mean / unit variance,
                              // targets centered
    double lambda = 0.5;
};

struct YearCsvDataset {
    LossEnsemble ensemble;
    int rows = 0;
    Eigen::VectorXd feature_mean;  // identity transform when !standardize
    Eigen::VectorXd feature_scale;
    double target_mean = 0.0;
};

// Throws FormatError (with the 1-based row number) on malformed rows and
// IoError when the file cannot be read.  Relative paths resolve against
// the directory named by GBMA_DATA_DIR when that variable is set.
YearCsvDataset load_year_csv(const YearCsvSpec& spec);

}  // namespace gbma
