#pragma once

#include <cstddef>
#include <vector>

#include "specsync/graph.hpp"
#include "specsync/spectral.hpp"
#include "specsync/types.hpp"

namespace specsync {

// Kuramoto-Sakaguchi system on a weighted graph:
//   dtheta_i/dt = omega_i - sigma sum_j A_ij sin(theta_i - theta_j + beta_ij)
// `beta` holds one lag per edge for the canonical orientation (i < j); the
// reverse orientation carries -beta. An empty beta means no phase lag.
// sigma = 0 (uncoupled) is accepted; the predictions need sigma > 0.
struct OscillatorSystem {
  WeightedGraph graph;
  Vector omega;
  double sigma = 1.0;
  Vector beta;

  OscillatorSystem(WeightedGraph g, Vector omega, double sigma, Vector beta = {});

  bool has_phase_lag() const { return beta.size() > 0 && beta.cwiseAbs().maxCoeff() > 0.0; }
  std::size_t size() const { return graph.num_vertices(); }
};

// Uniformly sampled time series; column k of `values` is the sample at
// t0 + k * dt.
struct SampledSeries {
  double t0 = 0.0;
  double dt = 0.0;
  Matrix values;

  std::size_t steps() const { return values.cols() > 0 ? static_cast<std::size_t>(values.cols() - 1) : 0; }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double end_time() const { return time(steps()); }
  Vector at(std::size_t k) const { return values.col(static_cast<Index>(k)); }
};

// Vertex phases, unwrapped in R.
struct Trajectory : SampledSeries {};
// Spectral coefficients alpha_r(t).
struct CoefficientTrajectory : SampledSeries {};

Vector vertex_rhs(const OscillatorSystem& sys, const Vector& theta);
Vector coefficient_rhs(const OscillatorSystem& sys, const SpectralBasis& basis, const Vector& alpha);

// Fixed-step classic RK4. `record_every` keeps every k-th step (the stored
// series then has dt * record_every spacing); `steps` must be a multiple of
// it. Throws BlowUpError on a non-finite state.
Trajectory integrate_vertex(const OscillatorSystem& sys, const Vector& theta0, double dt,
                            std::size_t steps, std::size_t record_every = 1, double t0 = 0.0);

CoefficientTrajectory integrate_coefficient(const OscillatorSystem& sys, const SpectralBasis& basis,
                                            const Vector& alpha0, double dt, std::size_t steps,
                                            std::size_t record_every = 1, double t0 = 0.0);

CoefficientTrajectory to_coefficients(const Trajectory& traj, const SpectralBasis& basis);
Trajectory to_phases(const CoefficientTrajectory& coeffs, const SpectralBasis& basis);

// Wrap into (-pi, pi].
double wrap_phase(double x);
double circular_mean(const Vector& phases);

// Suffix of `traj` starting at sample `at`, with each vertex shifted by a
// whole number of turns plus the circular mean at `at`, so the phases at
// `at` lie in (-pi, pi] around zero. Later samples keep their continuity.
Trajectory rezero(const Trajectory& traj, std::size_t at);

// Per cell: largest pairwise circular distance between phases at sample `at`.
std::vector<double> cluster_spread(const Trajectory& traj, const VertexPartition& p, std::size_t at);

}  // namespace specsync
