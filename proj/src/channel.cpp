#include "gbma/channel.hpp"

#include <cmath>

namespace gbma {

namespace {

// sin(x)/x with a series fallback near zero.
double sinc(double x) {
    if (std::abs(x) < 1e-8) {
        return 1.0 - x * x / 6.0;
    }
    return std::sin(x) / x;
}

constexpr double kQuarterPi = 0.78539816339744830961;

}  // namespace

// =============================== fading =================================

FadingModel FadingModel::unit() {
    FadingModel m;
    m.kind_ = FadingKind::kUnit;
    return m;
}

FadingModel FadingModel::rayleigh(double scale) {
    if (!(scale > 0.0)) {
        throw ConfigError("rayleigh scale must be > 0");
    }
    FadingModel m;
    m.kind_ = FadingKind::kRayleigh;
    m.rayleigh_scale_ = scale;
    return m;
}

FadingModel FadingModel::generic_iid(double mu_h, double sigma_h_sq,
                                     GainSampler sampler) {
    if (!(mu_h > 0.0)) {
        throw ConfigError("gain mean must be > 0");
    }
    if (!(sigma_h_sq >= 0.0)) {
        throw ConfigError("gain variance must be >= 0");
    }
    if (sampler == GainSampler::kUniform) {
        // Uniform on [mu - sqrt(3 v), mu + sqrt(3 v)] matches the requested
        // moments but must not cross zero: gains are nonnegative.
        if (mu_h - std::sqrt(3.0 * sigma_h_sq) < 0.0) {
            throw ConfigError("uniform gain sampler would produce negative "
                              "gains; reduce the variance or use lognormal");
        }
    }
    FadingModel m;
    m.kind_ = FadingKind::kGenericIid;
    m.gen_mu_ = mu_h;
    m.gen_var_ = sigma_h_sq;
    m.sampler_ = sampler;
    return m;
}

FadingModel FadingModel::with_phase_residual(const FadingModel& base,
                                             double max_phase_error) {
    if (base.has_phase_residual()) {
        throw ConfigError("phase residual is already set on this model");
    }
    if (!(max_phase_error >= 0.0) || max_phase_error >= kQuarterPi) {
        throw ConfigError("max phase error must lie in [0, pi/4)");
    }
    FadingModel m = base;
    m.phase_max_ = max_phase_error;
    return m;
}

FadingMoments FadingModel::moments() const {
    double mu = 1.0;
    double var = 0.0;
    switch (kind_) {
        case FadingKind::kUnit:
            break;
        case FadingKind::kRayleigh: {
            const double pi = 3.14159265358979323846;
            mu = rayleigh_scale_ * std::sqrt(pi / 2.0);
            var = (2.0 - pi / 2.0) * rayleigh_scale_ * rayleigh_scale_;
            break;
        }
        case FadingKind::kGenericIid:
            mu = gen_mu_;
            var = gen_var_;
            break;
    }
    if (phase_max_ > 0.0) {
        // Effective gain h*cos(phi), phi independent of h and uniform on
        // [-phase_max, phase_max]:
        //   E[cos phi]   = sin(p)/p
        //   E[cos^2 phi] = (1 + sin(2p)/(2p)) / 2
        const double a = sinc(phase_max_);
        const double b = 0.5 * (1.0 + sinc(2.0 * phase_max_));
        const double second = b * (mu * mu + var);
        mu *= a;
        var = second - mu * mu;
    }
    return {mu, var};
}

double FadingModel::gain_at(std::uint64_t seed, std::uint64_t k,
                            std::uint64_t n) const {
    StreamRng rng(seed, kStreamGains, k, n);
    double h = 1.0;
    switch (kind_) {
        case FadingKind::kUnit:
            break;
        case FadingKind::kRayleigh:
            h = rng.rayleigh(rayleigh_scale_);
            break;
        case FadingKind::kGenericIid:
            if (gen_var_ == 0.0) {
                h = gen_mu_;
            } else if (sampler_ == GainSampler::kUniform) {
                const double half = std::sqrt(3.0 * gen_var_);
                h = rng.uniform(gen_mu_ - half, gen_mu_ + half);
            } else {
                const double s2 = std::log(1.0 + gen_var_ / (gen_mu_ * gen_mu_));
                const double m = std::log(gen_mu_) - 0.5 * s2;
                h = std::exp(m + std::sqrt(s2) * rng.gaussian());
            }
            break;
    }
    if (phase_max_ > 0.0) {
        h *= std::cos(rng.uniform(-phase_max_, phase_max_));
    }
    return h;
}

std::string FadingModel::describe() const {
    std::string s;
    switch (kind_) {
        case FadingKind::kUnit:
            s = "unit";
            break;
        case FadingKind::kRayleigh:
            s = "rayleigh(scale=" + std::to_string(rayleigh_scale_) + ")";
            break;
        case FadingKind::kGenericIid:
            s = std::string(sampler_ == GainSampler::kUniform ? "uniform" : "lognormal") +
                "(mu=" + std::to_string(gen_mu_) +
                ", var=" + std::to_string(gen_var_) + ")";
            break;
    }
    if (phase_max_ > 0.0) {
        s += " + phase_residual(max=" + std::to_string(phase_max_) + ")";
    }
    return s;
}

ChannelDraw draw_gains(const FadingModel& model, std::uint64_t seed,
                       std::uint64_t k, int n_nodes) {
    if (n_nodes < 1) {
        throw ShapeError("gain draw needs at least one node");
    }
    ChannelDraw draw;
    draw.k = k;
    draw.gains.resize(n_nodes);
    for (int n = 0; n < n_nodes; ++n) {
        draw.gains[n] = model.gain_at(seed, k, static_cast<std::uint64_t>(n));
    }
    return draw;
}

double dispersion_index(const FadingMoments& m) {
    if (!(m.mu_h > 0.0)) {
        throw ConfigError("dispersion index needs a positive gain mean");
    }
    return m.sigma_h_sq / (m.mu_h * m.mu_h);
}

// ============================ energy rules ==============================

EnergySchedule EnergySchedule::constant(double value) {
    if (!(value > 0.0)) {
        throw ConfigError("constant energy must be > 0");
    }
    EnergySchedule s;
    s.kind_ = EnergyKind::kConst;
    s.param_ = value;
    return s;
}

EnergySchedule EnergySchedule::power_law(double epsilon) {
    if (!std::isfinite(epsilon)) {
        throw ConfigError("power-law exponent must be finite");
    }
    EnergySchedule s;
    s.kind_ = EnergyKind::kPowerLaw;
    s.param_ = epsilon;
    return s;
}

EnergySchedule EnergySchedule::exponent(double p) {
    if (!std::isfinite(p)) {
        throw ConfigError("energy exponent must be finite");
    }
    EnergySchedule s;
    s.kind_ = EnergyKind::kExponent;
    s.param_ = p;
    return s;
}

double EnergySchedule::energy_at(int n_nodes) const {
    if (n_nodes < 1) {
        throw ShapeError("energy schedule needs N >= 1");
    }
    const double n = static_cast<double>(n_nodes);
    switch (kind_) {
        case EnergyKind::kConst:
            return param_;
        case EnergyKind::kPowerLaw:
            return std::pow(n, param_ - 2.0);
        case EnergyKind::kExponent:
            return std::pow(n, param_);
    }
    return param_;
}

std::string EnergySchedule::describe() const {
    switch (kind_) {
        case EnergyKind::kConst:
            return "const(" + std::to_string(param_) + ")";
        case EnergyKind::kPowerLaw:
            return "powerlaw(epsilon=" + std::to_string(param_) + ")";
        case EnergyKind::kExponent:
            return "exponent(p=" + std::to_string(param_) + ")";
    }
    return "?";
}

double effective_noise_sigma(const NoiseModel& noise, const EnergySchedule& schedule,
                             int n_nodes) {
    if (!(noise.sigma_w_sq >= 0.0)) {
        throw ConfigError("noise variance must be >= 0");
    }
    const double e = schedule.energy_at(n_nodes);
    return std::sqrt(noise.sigma_w_sq) /
           (static_cast<double>(n_nodes) * std::sqrt(e));
}

double snr_db(const EnergySchedule& schedule, const NoiseModel& noise,
              double mean_sq_gradient, const FadingModel& fading, int n_nodes,
              int dim) {
    if (!(noise.sigma_w_sq > 0.0)) {
        throw UndefinedSnrError("SNR is undefined without receiver noise");
    }
    if (!(mean_sq_gradient > 0.0)) {
        throw UndefinedSnrError("SNR is undefined for zero signal power");
    }
    if (dim < 1) {
        throw ShapeError("SNR needs dimension >= 1");
    }
    const FadingMoments m = fading.moments();
    const double second_moment = m.mu_h * m.mu_h + m.sigma_h_sq;
    const double e = schedule.energy_at(n_nodes);
    return 10.0 * std::log10(e * second_moment * mean_sq_gradient /
                             (static_cast<double>(dim) * noise.sigma_w_sq));
}

}  // namespace gbma
