#include "specsync/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace specsync {
namespace {

template <typename Rhs>
Vector rk4_step(const Rhs& f, const Vector& y, double dt) {
  const Vector k1 = f(y);
  const Vector k2 = f(y + 0.5 * dt * k1);
  const Vector k3 = f(y + 0.5 * dt * k2);
  const Vector k4 = f(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename Rhs>
Matrix run_rk4(const Rhs& f, const Vector& y0, double dt, std::size_t steps,
               std::size_t record_every, const char* label) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
  if (record_every == 0 || steps % record_every != 0) {
    throw InvalidInput("steps must be a positive multiple of record_every");
  }
  if (!y0.allFinite()) throw InvalidInput("initial state is not finite");
  Matrix out(y0.size(), static_cast<Index>(steps / record_every + 1));
  out.col(0) = y0;
  Vector y = y0;
  for (std::size_t s = 1; s <= steps; ++s) {
    y = rk4_step(f, y, dt);
    if (!y.allFinite()) throw BlowUpError(std::string(label) + ": non-finite state", s);
    if (s % record_every == 0) out.col(static_cast<Index>(s / record_every)) = y;
  }
  return out;
}

}  // namespace

OscillatorSystem::OscillatorSystem(WeightedGraph g, Vector omega_, double sigma_, Vector beta_)
    : graph(std::move(g)), omega(std::move(omega_)), sigma(sigma_), beta(std::move(beta_)) {
  if (omega.size() != static_cast<Index>(graph.num_vertices())) {
    throw InvalidInput("omega length must equal the vertex count");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be non-negative");
  if (beta.size() != 0 && beta.size() != static_cast<Index>(graph.num_edges())) {
    throw InvalidInput("beta length must equal the edge count");
  }
  if (!omega.allFinite() || (beta.size() && !beta.allFinite())) {
    throw InvalidInput("omega and beta must be finite");
  }
}

Vector vertex_rhs(const OscillatorSystem& sys, const Vector& theta) {
  Vector d = sys.omega;
  const auto& edges = sys.graph.edges();
  const bool lag = sys.beta.size() > 0;
  for (std::size_t a = 0; a < edges.size(); ++a) {
    const auto i = static_cast<Index>(edges[a].i);
    const auto j = static_cast<Index>(edges[a].j);
    const double phase = theta[i] - theta[j] + (lag ? sys.beta[static_cast<Index>(a)] : 0.0);
    const double s = sys.sigma * edges[a].w * std::sin(phase);
    d[i] -= s;
    d[j] += s;
  }
  return d;
}

Vector coefficient_rhs(const OscillatorSystem& sys, const SpectralBasis& basis, const Vector& alpha) {
  const Index n = alpha.size();
  const Index m = basis.edge_vectors.rows();
  // Edge differences from the nonzero modes only; mode 0 is constant on a
  // connected graph and contributes nothing.
  Vector edge_phase = basis.edge_vectors.rightCols(n - 1) * alpha.tail(n - 1);
  if (sys.beta.size() > 0) edge_phase += basis.orientation.cwiseProduct(sys.beta);
  Vector coupling(m);
  for (Index a = 0; a < m; ++a) coupling[a] = basis.edge_weights[a] * std::sin(edge_phase[a]);

  Vector d = basis.vertex_vectors.transpose() * sys.omega;
  d.tail(n - 1) -= sys.sigma * (basis.edge_vectors.rightCols(n - 1).transpose() * coupling);
  return d;
}

Trajectory integrate_vertex(const OscillatorSystem& sys, const Vector& theta0, double dt,
                            std::size_t steps, std::size_t record_every, double t0) {
  if (theta0.size() != sys.omega.size()) throw InvalidInput("theta0 length must equal the vertex count");
  Trajectory traj;
  traj.t0 = t0;
  traj.dt = dt * static_cast<double>(record_every);
  traj.values = run_rk4([&](const Vector& y) { return vertex_rhs(sys, y); }, theta0, dt, steps,
                        record_every, "integrate_vertex");
  return traj;
}

CoefficientTrajectory integrate_coefficient(const OscillatorSystem& sys, const SpectralBasis& basis,
                                            const Vector& alpha0, double dt, std::size_t steps,
                                            std::size_t record_every, double t0) {
  if (alpha0.size() != sys.omega.size() || basis.size() != sys.size() ||
      basis.num_edges() != sys.graph.num_edges()) {
    throw InvalidInput("basis, system and alpha0 sizes do not match");
  }
  CoefficientTrajectory traj;
  traj.t0 = t0;
  traj.dt = dt * static_cast<double>(record_every);
  traj.values = run_rk4([&](const Vector& y) { return coefficient_rhs(sys, basis, y); }, alpha0, dt,
                        steps, record_every, "integrate_coefficient");
  return traj;
}

CoefficientTrajectory to_coefficients(const Trajectory& traj, const SpectralBasis& basis) {
  CoefficientTrajectory out;
  out.t0 = traj.t0;
  out.dt = traj.dt;
  out.values = basis.vertex_vectors.transpose() * traj.values;
  return out;
}

Trajectory to_phases(const CoefficientTrajectory& coeffs, const SpectralBasis& basis) {
  Trajectory out;
  out.t0 = coeffs.t0;
  out.dt = coeffs.dt;
  out.values = basis.vertex_vectors * coeffs.values;
  return out;
}

double wrap_phase(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(x, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

double circular_mean(const Vector& phases) {
  double s = 0.0;
  double c = 0.0;
  for (Index i = 0; i < phases.size(); ++i) {
    s += std::sin(phases[i]);
    c += std::cos(phases[i]);
  }
  return std::atan2(s, c);
}

Trajectory rezero(const Trajectory& traj, std::size_t at) {
  if (traj.values.cols() == 0 || at > traj.steps()) throw InvalidInput("rezero: index out of range");
  const Vector ref = traj.at(at);
  const double mu = circular_mean(ref);
  Vector shift(ref.size());
  for (Index i = 0; i < ref.size(); ++i) shift[i] = ref[i] - wrap_phase(ref[i] - mu);

  Trajectory out;
  out.t0 = traj.time(at);
  out.dt = traj.dt;
  out.values = traj.values.rightCols(traj.values.cols() - static_cast<Index>(at)).colwise() - shift;
  return out;
}

std::vector<double> cluster_spread(const Trajectory& traj, const VertexPartition& p, std::size_t at) {
  if (at > traj.steps()) throw InvalidInput("cluster_spread: index out of range");
  if (static_cast<Index>(p.num_vertices()) != traj.values.rows()) {
    throw InvalidInput("cluster_spread: partition size does not match the trajectory");
  }
  const Vector theta = traj.at(at);
  std::vector<double> spread;
  for (const auto& cell : p.cells()) {
    double widest = 0.0;
    for (std::size_t a = 0; a < cell.size(); ++a) {
      for (std::size_t b = a + 1; b < cell.size(); ++b) {
        const double d = std::abs(wrap_phase(theta[static_cast<Index>(cell[a])] -
                                             theta[static_cast<Index>(cell[b])]));
        widest = std::max(widest, d);
      }
    }
    spread.push_back(widest);
  }
  return spread;
}

}  // namespace specsync
