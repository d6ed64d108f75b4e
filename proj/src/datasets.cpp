#include "gbma/datasets.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "gbma/compensated.hpp"
#include "gbma/rng.hpp"

namespace gbma {

// ========================== synthetic ridge =============================

RidgeDataset gen_synthetic_ridge(const SyntheticRidgeSpec& spec) {
    if (spec.n_nodes < 1 || spec.dim < 1) {
        throw ConfigError("synthetic ridge needs N >= 1 and d >= 1");
    }
    if (!(spec.conditioning >= 1.0)) {
        throw ConfigError("condition number must be >= 1");
    }
    if (!(spec.noise_std >= 0.0) || !(spec.lambda >= 0.0) ||
        !(spec.theta_scale >= 0.0)) {
        throw ConfigError("noise, lambda and theta scale must be >= 0");
    }

    StreamRng rng(spec.seed, kStreamDataset);
    const int d = spec.dim;

    ParamVec theta_true = ParamVec::Zero(d);
    if (spec.theta_scale > 0.0) {
        for (int i = 0; i < d; ++i) theta_true[i] = rng.gaussian();
        const double norm = theta_true.norm();
        if (norm > 0.0) theta_true *= spec.theta_scale / norm;
    }

    // Per-coordinate feature scales fall geometrically from 1 to
    // 1/sqrt(conditioning), so the population Gram matrix has eigenvalues
    // from 1 down to 1/conditioning.
    Eigen::VectorXd scale(d);
    for (int i = 0; i < d; ++i) {
        const double frac = d > 1 ? static_cast<double>(i) / (d - 1) : 0.0;
        scale[i] = std::pow(spec.conditioning, -0.5 * frac);
    }

    std::vector<RidgeLoss> losses;
    losses.reserve(spec.n_nodes);
    for (int n = 0; n < spec.n_nodes; ++n) {
        RidgeLoss l;
        l.x.resize(d);
        for (int i = 0; i < d; ++i) l.x[i] = scale[i] * rng.gaussian();
        l.y = l.x.dot(theta_true) + spec.noise_std * rng.gaussian();
        l.lambda = spec.lambda;
        losses.push_back(std::move(l));
    }
    return RidgeDataset{LossEnsemble::ridge(std::move(losses)), std::move(theta_true)};
}

// ======================== localization field ============================

LocalizationDataset gen_localization_field(const LocalizationFieldSpec& spec) {
    if (spec.n_nodes < 1) {
        throw ConfigError("localization field needs N >= 1");
    }
    if (!(spec.field_size > 0.0) || !(spec.exclusion_radius >= 0.0)) {
        throw ConfigError("field size must be > 0 and exclusion >= 0");
    }
    if (!(spec.strength > 0.0) || !(spec.guard_radius > 0.0)) {
        throw ConfigError("source strength and guard radius must be > 0");
    }

    // The exclusion disc must leave some of the field free; checking the
    // corners is enough because they are the farthest points of the square.
    double far_corner = 0.0;
    for (double cx : {0.0, spec.field_size}) {
        for (double cy : {0.0, spec.field_size}) {
            const double dx = cx - spec.source[0];
            const double dy = cy - spec.source[1];
            far_corner = std::max(far_corner, std::hypot(dx, dy));
        }
    }
    if (spec.exclusion_radius >= far_corner) {
        throw ConfigError("exclusion disc covers the whole field; "
                          "no sensor placement is possible");
    }

    StreamRng rng(spec.seed, kStreamDataset);
    std::vector<Eigen::Vector2d> sensors;
    std::vector<double> signals;
    sensors.reserve(spec.n_nodes);
    signals.reserve(spec.n_nodes);

    for (int n = 0; n < spec.n_nodes; ++n) {
        bool placed = false;
        for (int attempt = 0; attempt < 100000; ++attempt) {
            Eigen::Vector2d p(rng.uniform(0.0, spec.field_size),
                              rng.uniform(0.0, spec.field_size));
            const double dist = (p - spec.source).norm();
            if (dist >= spec.exclusion_radius && dist > spec.guard_radius) {
                sensors.push_back(p);
                signals.push_back(spec.strength / (dist * dist));
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw ConfigError("sensor placement failed: exclusion disc leaves "
                              "almost no admissible area");
        }
    }

    double noise_sigma = 0.0;
    if (std::isfinite(spec.snr_db)) {
        CompensatedScalar power;
        for (double s : signals) power.add(s * s);
        const double mean_sq = power.value() / static_cast<double>(spec.n_nodes);
        noise_sigma = std::sqrt(mean_sq * std::pow(10.0, -spec.snr_db / 10.0));
    }

    std::vector<LocalizationLoss> losses;
    losses.reserve(spec.n_nodes);
    for (int n = 0; n < spec.n_nodes; ++n) {
        LocalizationLoss l;
        l.sensor = sensors[n];
        l.measurement = signals[n] + (noise_sigma > 0.0 ? noise_sigma * rng.gaussian() : 0.0);
        l.strength = spec.strength;
        l.guard_radius = spec.guard_radius;
        losses.push_back(std::move(l));
    }

    LocalizationDataset out{LossEnsemble::localization(std::move(losses)),
                            spec.source, noise_sigma};
    return out;
}

// ========================== CSV year loader =============================

namespace {

double parse_cell(const std::string& cell, int row, int col) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw FormatError("row " + std::to_string(row) + ", column " +
                          std::to_string(col) + ": not a number: '" + cell + "'");
    }
    return value;
}

}  // namespace

YearCsvDataset load_year_csv(const YearCsvSpec& spec) {
    if (spec.limit < 0) {
        throw ConfigError("row limit must be >= 0");
    }
    std::string path = spec.path;
    if (!path.empty() && path.front() != '/') {
        if (const char* dir = std::getenv(kDataDirEnvVar); dir != nullptr && dir[0] != '\0') {
            path = std::string(dir) + "/" + path;
        }
    }

    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path);
    }

    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    int dim = -1;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (dim == -1) {
            if (cells.size() < 2) {
                throw FormatError("row 1: need a target plus at least one feature");
            }
            dim = static_cast<int>(cells.size()) - 1;
        } else if (static_cast<int>(cells.size()) != dim + 1) {
            throw FormatError("row " + std::to_string(row) + ": expected " +
                              std::to_string(dim + 1) + " columns, found " +
                              std::to_string(cells.size()));
        }
        double y = parse_cell(cells[0], row, 1);
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) {
            x[i] = parse_cell(cells[i + 1], row, i + 2);
        }
        xs.push_back(std::move(x));
        ys.push_back(y);
        if (spec.limit > 0 && static_cast<int>(xs.size()) == spec.limit) {
            break;
        }
    }
    if (xs.empty()) {
        throw FormatError("dataset file has no data rows: " + path);
    }

    const int n = static_cast<int>(xs.size());
    YearCsvDataset out;
    out.rows = n;
    out.feature_mean = Eigen::VectorXd::Zero(dim);
    out.feature_scale = Eigen::VectorXd::Ones(dim);

    if (spec.standardize) {
        for (int i = 0; i < dim; ++i) {
            CompensatedScalar mean_acc;
            for (const auto& x : xs) mean_acc.add(x[i]);
            const double mean = mean_acc.value() / n;
            CompensatedScalar var_acc;
            for (const auto& x : xs) {
                const double dx = x[i] - mean;
                var_acc.add(dx * dx);
            }
            const double sd = std::sqrt(var_acc.value() / n);
            out.feature_mean[i] = mean;
            out.feature_scale[i] = sd > 0.0 ? sd : 1.0;  // constant features
                                                         // stay centered only
        }
        CompensatedScalar y_acc;
        for (double y : ys) y_acc.add(y);
        out.target_mean = y_acc.value() / n;
    }

    std::vector<RidgeLoss> losses;
    losses.reserve(n);
    for (int r = 0; r < n; ++r) {
        RidgeLoss l;
        l.x = (xs[r] - out.feature_mean).cwiseQuotient(out.feature_scale);
        l.y = ys[r] - out.target_mean;
        l.lambda = spec.lambda;
        losses.push_back(std::move(l));
    }
    out.ensemble = LossEnsemble::ridge(std::move(losses));
    return out;
}

}  // namespace gbma
