#pragma once

/**
 * Multiple-access channel description: per-node fading gains, receiver
 * noise, and the per-node energy schedule.
 *
 * Gains are i.i.d. across nodes and iterations.  The gain of node n at
 * iteration k is a pure function of (seed, k, n) — see rng.hpp — so a draw
 * can be reproduced without replaying anything that came before it.
 */

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "gbma/errors.hpp"
#include "gbma/rng.hpp"

namespace gbma {

// =============================== fading =================================

enum class FadingKind { kUnit, kRayleigh, kGenericIid };

// Samplers available for the generic i.i.d. model.  Both are inverse-form
// (no rejection), so each gain consumes a fixed number of stream steps.
enum class GainSampler { kUniform, kLognormal };

struct FadingMoments {
    double mu_h = 0.0;        // E[h] (after any phase residual)
    double sigma_h_sq = 0.0;  // Var[h]
};

/**
 * Fading gain model.  An optional residual phase error wraps any base
 * model: the effective gain becomes h * cos(phi) with phi uniform on
 * [-max_phase_error, +max_phase_error], max_phase_error < pi/4, which can
 * shrink a gain but never flip its sign.
 */
class FadingModel {
  public:
    static FadingModel unit();
    static FadingModel rayleigh(double scale);
    static FadingModel generic_iid(double mu_h, double sigma_h_sq, GainSampler sampler);

    // Returns a copy of `base` with a residual phase error applied.
    static FadingModel with_phase_residual(const FadingModel& base,
                                           double max_phase_error);

    FadingKind kind() const { return kind_; }
    double phase_max() const { return phase_max_; }
    bool has_phase_residual() const { return phase_max_ > 0.0; }
    double rayleigh_scale() const { return rayleigh_scale_; }
    GainSampler sampler() const { return sampler_; }

    // Exact first and second central moments of the effective gain.
    FadingMoments moments() const;

    // Gain of node n at iteration k (>= 0 by construction).
    double gain_at(std::uint64_t seed, std::uint64_t k, std::uint64_t n) const;

    std::string describe() const;

  private:
    FadingModel() = default;
    FadingKind kind_ = FadingKind::kUnit;
    double rayleigh_scale_ = 1.0;
    double gen_mu_ = 1.0;
    double gen_var_ = 0.0;
    GainSampler sampler_ = GainSampler::kUniform;
    double phase_max_ = 0.0;  // 0 means no phase residual
};

struct ChannelDraw {
    std::uint64_t k = 0;    // iteration the draw belongs to
    Eigen::VectorXd gains;  // one nonnegative gain per node
};

// All N gains for iteration k.  Same (seed, k, N) => identical draw.
ChannelDraw draw_gains(const FadingModel& model, std::uint64_t seed,
                       std::uint64_t k, int n_nodes);

// Fading severity sigma_h^2 / mu_h^2 (squared coefficient of variation):
// scale-free, zero for equal gains, smaller is closer to the
// noiseless-aggregation ideal.
double dispersion_index(const FadingMoments& m);

// ============================ noise model ===============================

struct NoiseModel {
    double sigma_w_sq = 0.0;  // receiver noise variance per dimension, >= 0
};

// ============================ energy rules ==============================

enum class EnergyKind {
    kConst,     // E_N = value
    kPowerLaw,  // E_N = N^(epsilon - 2), the decay window's lower edge shape
    kExponent,  // E_N = N^p for a directly chosen exponent p
};

class EnergySchedule {
  public:
    static EnergySchedule constant(double value);
    static EnergySchedule power_law(double epsilon);
    static EnergySchedule exponent(double p);

    EnergyKind kind() const { return kind_; }
    double parameter() const { return param_; }

    // Per-node transmit energy at network size N (> 0 always).
    double energy_at(int n_nodes) const;

    std::string describe() const;

  private:
    EnergyKind kind_ = EnergyKind::kConst;
    double param_ = 1.0;
};

// Standard deviation per dimension of the post-aggregation noise:
// sigma_w / (N * sqrt(E_N)).
double effective_noise_sigma(const NoiseModel& noise, const EnergySchedule& schedule,
                             int n_nodes);

// Operating-point SNR in dB: received signal energy over total noise
// energy for one transmission slot,
//   10*log10(E_N * E[h^2] * mean_sq_gradient / (d * sigma_w^2)).
// Throws UndefinedSnrError when sigma_w^2 == 0 or the signal power is 0.
double snr_db(const EnergySchedule& schedule, const NoiseModel& noise,
              double mean_sq_gradient, const FadingModel& fading, int n_nodes,
              int dim);

}  // namespace gbma
