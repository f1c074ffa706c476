#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "specsync/dynamics.hpp"
#include "specsync/spectral.hpp"
#include "specsync/types.hpp"

namespace specsync {

// The trajectory has not reached equilibrium.
class NotSettledError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linearized behaviour of one nonzero mode r:
//   dalpha_r/dt = omega_r - sigma * lag_term - sigma * lambda_r * alpha_r
struct ModePrediction {
  std::size_t mode = 0;
  double eigenvalue = 0.0;
  double sigma = 1.0;
  double omega_r = 0.0;    // omega . v^(r)
  double lag_term = 0.0;   // sum_a W_aa e_a^(r) beta_a
  double alpha_inf = 0.0;
  double decay_rate = 0.0; // sigma * lambda_r
};

struct LinearPrediction {
  std::vector<ModePrediction> modes;  // r = 1 .. n-1 in order

  const ModePrediction& mode(std::size_t r) const;
  // Length-n vector of limits; entry 0 (the drifting mean mode) is 0.
  Vector alpha_inf() const;
};

// alpha_r(t) = alpha_inf (1 - e^{-sigma lambda t}) + alpha_r(0) e^{-sigma lambda t}
double linear_solution(const ModePrediction& pred, double alpha_r0, double t);

// Throws InvalidInput if a nonzero mode has lambda_r <= 0.
LinearPrediction asymptotic_coefficients(const OscillatorSystem& sys, const SpectralBasis& basis);

struct ModeError {
  std::size_t mode = 0;
  double simulated = 0.0;
  double predicted = 0.0;
  double magnitude = 0.0;  // |alpha_r(T)|
  double error = 0.0;      // |alpha_r(T) - alpha_inf|
};

// Final-sample comparison against the linear limits. The derivative is
// estimated from the last two samples; throws NotSettledError if any mode
// r >= 1 still moves faster than `settle_rate`.
std::vector<ModeError> prediction_error_profile(const CoefficientTrajectory& sim,
                                                const LinearPrediction& pred,
                                                double settle_rate = 1e-6);

// Second-order coupling of mode r1 to the settled linear limits of the
// other modes:
//   x = sum_{s != 0, r1} omega_s / (2 sigma lambda_s) sum_a W_aa (e_a^(r1))^3 e_a^(s)
double x_coupling(const OscillatorSystem& sys, const SpectralBasis& basis, std::size_t r1);

enum class ModeRegime { fixed_point, limit_cycle };

struct DiscriminantEntry {
  std::size_t mode = 0;
  double eigenvalue = 0.0;
  double omega_r = 0.0;
  double x = 0.0;
  double delta = 0.0;  // sigma^2 lambda^2 - 4 sigma omega_r x
  ModeRegime regime = ModeRegime::fixed_point;
};

DiscriminantEntry discriminant(const OscillatorSystem& sys, const SpectralBasis& basis, std::size_t r1);
std::vector<DiscriminantEntry> discriminant_report(const OscillatorSystem& sys,
                                                   const SpectralBasis& basis);

struct SingleModeValue {
  double value = 0.0;
  bool valid = true;
};

// Closed-form solution of the single-unstable-mode reduction
//   dalpha/dt = omega_r - sigma lambda alpha + sigma x alpha^2
// from alpha(0) = alpha_r1_0. For Delta > 0 this is the stable logistic
// branch; for Delta < 0 the tangent solution, flagged invalid once
// |2 sigma x alpha - sigma lambda| reaches `singularity_margin` or the
// tangent passes its pole.
SingleModeValue single_mode_solution(const OscillatorSystem& sys, const SpectralBasis& basis,
                                     std::size_t r1, double alpha_r1_0, double t,
                                     double singularity_margin);

struct Regime {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<std::size_t> active;
};

struct RegimeSegmentation {
  double threshold = 0.0;
  double min_dwell = 0.0;
  std::vector<Regime> regimes;
};

// 2% of the largest |alpha_r(t)|, r >= 1, over the whole trajectory.
double default_activity_threshold(const CoefficientTrajectory& sim);

// Maximal intervals of constant active-mode set (|alpha_r| > threshold,
// r >= 1). An interval shorter than `min_dwell` is folded into the regime
// before it, whose active set becomes the union of both.
RegimeSegmentation segment_regimes(const CoefficientTrajectory& sim, double threshold,
                                   double min_dwell);

// Least-squares decay rate of log|alpha_r| over samples in [t_begin, t_end].
double fitted_decay_rate(const CoefficientTrajectory& sim, std::size_t r, double t_begin,
                         double t_end);

// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace specsync
