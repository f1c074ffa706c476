#include "specsync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace specsync {
namespace {

void require_nonzero_mode(const SpectralBasis& basis, std::size_t r) {
  if (r == 0 || r >= basis.size()) {
    throw InvalidInput("mode index must be in 1.." + std::to_string(basis.size() - 1));
  }
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

const ModePrediction& LinearPrediction::mode(std::size_t r) const {
  if (r == 0 || r > modes.size()) throw InvalidInput("mode index out of range");
  return modes[r - 1];
}

Vector LinearPrediction::alpha_inf() const {
  Vector out = Vector::Zero(static_cast<Index>(modes.size() + 1));
  for (const auto& m : modes) out[static_cast<Index>(m.mode)] = m.alpha_inf;
  return out;
}

double linear_solution(const ModePrediction& pred, double alpha_r0, double t) {
  if (!(pred.eigenvalue > 0.0)) throw InvalidInput("linear_solution: eigenvalue must be positive");
  const double decay = std::exp(-pred.decay_rate * t);
  return pred.alpha_inf * (1.0 - decay) + alpha_r0 * decay;
}

LinearPrediction asymptotic_coefficients(const OscillatorSystem& sys, const SpectralBasis& basis) {
  if (!(sys.sigma > 0.0)) throw InvalidInput("asymptotic_coefficients: sigma must be positive");
  const Vector omega_modes = basis.vertex_vectors.transpose() * sys.omega;
  Vector lag = Vector::Zero(static_cast<Index>(basis.size()));
  if (sys.beta.size() > 0) {
    const Vector oriented = basis.orientation.cwiseProduct(sys.beta);
    lag = basis.edge_vectors.transpose() * basis.edge_weights.cwiseProduct(oriented);
  }
  LinearPrediction pred;
  for (std::size_t r = 1; r < basis.size(); ++r) {
    const auto ri = static_cast<Index>(r);
    ModePrediction m;
    m.mode = r;
    m.eigenvalue = basis.eigenvalues[ri];
    if (!(m.eigenvalue > 0.0)) {
      throw InvalidInput("asymptotic_coefficients: nonzero mode with non-positive eigenvalue");
    }
    m.sigma = sys.sigma;
    m.omega_r = omega_modes[ri];
    m.lag_term = lag[ri];
    m.decay_rate = sys.sigma * m.eigenvalue;
    m.alpha_inf = (m.omega_r - sys.sigma * m.lag_term) / m.decay_rate;
    pred.modes.push_back(m);
  }
  return pred;
}

std::vector<ModeError> prediction_error_profile(const CoefficientTrajectory& sim,
                                                const LinearPrediction& pred, double settle_rate) {
  if (sim.values.cols() < 2) throw NotSettledError("trajectory too short to judge settling");
  if (static_cast<std::size_t>(sim.values.rows()) != pred.modes.size() + 1) {
    throw InvalidInput("prediction_error_profile: trajectory and prediction sizes differ");
  }
  const Vector last = sim.at(sim.steps());
  const Vector prev = sim.at(sim.steps() - 1);
  const double rate = ((last - prev) / sim.dt).tail(last.size() - 1).cwiseAbs().maxCoeff();
  if (rate > settle_rate) {
    throw NotSettledError("trajectory not settled: max |dalpha/dt| = " + std::to_string(rate));
  }
  std::vector<ModeError> out;
  for (const auto& m : pred.modes) {
    ModeError e;
    e.mode = m.mode;
    e.simulated = last[static_cast<Index>(m.mode)];
    e.predicted = m.alpha_inf;
    e.magnitude = std::abs(e.simulated);
    e.error = std::abs(e.simulated - e.predicted);
    out.push_back(e);
  }
  return out;
}

double x_coupling(const OscillatorSystem& sys, const SpectralBasis& basis, std::size_t r1) {
  require_nonzero_mode(basis, r1);
  if (!(sys.sigma > 0.0)) throw InvalidInput("x_coupling: sigma must be positive");
  const Vector omega_modes = basis.vertex_vectors.transpose() * sys.omega;
  const Vector e1 = basis.edge_vectors.col(static_cast<Index>(r1));
  const Vector cubed = basis.edge_weights.cwiseProduct(e1.cwiseProduct(e1).cwiseProduct(e1));
  double x = 0.0;
  for (std::size_t s = 1; s < basis.size(); ++s) {
    if (s == r1) continue;
    const auto si = static_cast<Index>(s);
    const double weight = omega_modes[si] / (2.0 * sys.sigma * basis.eigenvalues[si]);
    if (weight == 0.0) continue;
    x += weight * cubed.dot(basis.edge_vectors.col(si));
  }
  return x;
}

DiscriminantEntry discriminant(const OscillatorSystem& sys, const SpectralBasis& basis, std::size_t r1) {
  require_nonzero_mode(basis, r1);
  DiscriminantEntry d;
  d.mode = r1;
  d.eigenvalue = basis.eigenvalues[static_cast<Index>(r1)];
  d.omega_r = basis.vertex_vectors.col(static_cast<Index>(r1)).dot(sys.omega);
  d.x = x_coupling(sys, basis, r1);
  const double sl = sys.sigma * d.eigenvalue;
  d.delta = sl * sl - 4.0 * sys.sigma * d.omega_r * d.x;
  d.regime = d.delta < 0.0 ? ModeRegime::limit_cycle : ModeRegime::fixed_point;
  return d;
}

std::vector<DiscriminantEntry> discriminant_report(const OscillatorSystem& sys,
                                                   const SpectralBasis& basis) {
  std::vector<DiscriminantEntry> out;
  for (std::size_t r = 1; r < basis.size(); ++r) out.push_back(discriminant(sys, basis, r));
  return out;
}

SingleModeValue single_mode_solution(const OscillatorSystem& sys, const SpectralBasis& basis,
                                     std::size_t r1, double alpha_r1_0, double t,
                                     double singularity_margin) {
  const DiscriminantEntry d = discriminant(sys, basis, r1);
  const double sl = sys.sigma * d.eigenvalue;
  const double sx = sys.sigma * d.x;

  if (std::abs(sx) <= 1e-14 * std::max(1.0, sl)) {
    ModePrediction linear;
    linear.eigenvalue = d.eigenvalue;
    linear.decay_rate = sl;
    linear.alpha_inf = d.omega_r / sl;
    return {linear_solution(linear, alpha_r1_0, t), true};
  }

  const double z0 = 2.0 * sx * alpha_r1_0 - sl;
  if (d.delta > 0.0) {
    const double root = std::sqrt(d.delta);
    const double p = (sl + root - 2.0 * sx * alpha_r1_0) / (sl - root - 2.0 * sx * alpha_r1_0);
    const double growth = p * std::exp(root * t);
    // Starting beyond the unstable root the solution escapes in finite time.
    const bool valid = (1.0 - p) * (1.0 - growth) > 0.0;
    if (std::abs(growth) <= 1.0) {
      return {((sl + root) - (sl - root) * growth) / (2.0 * sx * (1.0 - growth)), valid};
    }
    // divide through by growth so large t does not overflow
    const double inv = std::exp(-root * t) / p;
    return {((sl + root) * inv - (sl - root)) / (2.0 * sx * (inv - 1.0)), valid};
  }
  if (d.delta == 0.0) {
    // dz/dt = z^2 / 2
    const double z = z0 / (1.0 - 0.5 * z0 * t);
    return {(z + sl) / (2.0 * sx), 1.0 - 0.5 * z0 * t > 0.0 && std::abs(z) < singularity_margin};
  }
  // dz/dt = (z^2 + |Delta|) / 2 with z = 2 sigma x alpha - sigma lambda.
  const double root = std::sqrt(-d.delta);
  const double angle = 0.5 * root * t + std::atan(z0 / root);
  const double z = root * std::tan(angle);
  const bool valid = angle < 0.5 * std::numbers::pi && std::abs(z) < singularity_margin;
  return {(z + sl) / (2.0 * sx), valid};
}

double default_activity_threshold(const CoefficientTrajectory& sim) {
  if (sim.values.rows() < 2) return 0.0;
  return 0.02 * sim.values.bottomRows(sim.values.rows() - 1).cwiseAbs().maxCoeff();
}

RegimeSegmentation segment_regimes(const CoefficientTrajectory& sim, double threshold,
                                   double min_dwell) {
  if (!(threshold > 0.0)) throw InvalidInput("segment_regimes: threshold must be positive");
  RegimeSegmentation seg;
  seg.threshold = threshold;
  seg.min_dwell = min_dwell;
  if (sim.values.cols() == 0) return seg;

  auto active_at = [&](std::size_t k) {
    std::vector<std::size_t> act;
    for (Index r = 1; r < sim.values.rows(); ++r) {
      if (std::abs(sim.values(r, static_cast<Index>(k))) > threshold) act.push_back(static_cast<std::size_t>(r));
    }
    return act;
  };

  std::vector<Regime> raw;
  for (std::size_t k = 0; k <= sim.steps(); ++k) {
    auto act = active_at(k);
    if (raw.empty() || raw.back().active != act) {
      if (!raw.empty()) raw.back().t_end = sim.time(k);
      raw.push_back({sim.time(k), sim.time(k), std::move(act)});
    }
  }
  raw.back().t_end = sim.end_time();

  auto merge_into = [](Regime& target, const Regime& extra) {
    std::set<std::size_t> u(target.active.begin(), target.active.end());
    u.insert(extra.active.begin(), extra.active.end());
    target.active.assign(u.begin(), u.end());
    target.t_end = extra.t_end;
  };

  for (auto& r : raw) {
    const bool short_lived = r.t_end - r.t_start < min_dwell;
    if (!seg.regimes.empty() && (short_lived || seg.regimes.back().active == r.active)) {
      merge_into(seg.regimes.back(), r);
    } else {
      seg.regimes.push_back(std::move(r));
    }
  }
  return seg;
}

double fitted_decay_rate(const CoefficientTrajectory& sim, std::size_t r, double t_begin,
                         double t_end) {
  if (r >= static_cast<std::size_t>(sim.values.rows())) throw InvalidInput("fitted_decay_rate: bad mode");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k <= sim.steps(); ++k) {
    const double t = sim.time(k);
    if (t < t_begin || t > t_end) continue;
    const double a = std::abs(sim.values(static_cast<Index>(r), static_cast<Index>(k)));
    if (!(a > 0.0)) continue;
    const double y = std::log(a);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    ++count;
  }
  if (count < 2) throw InvalidInput("fitted_decay_rate: fewer than two usable samples");
  const double nn = static_cast<double>(count);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return -slope;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("spearman: need two equal-length samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0.0 || dy == 0.0) return 0.0;
  return num / std::sqrt(dx * dy);
}

}  // namespace specsync
