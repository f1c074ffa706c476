#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "specsync/graph.hpp"
#include "specsync/types.hpp"

namespace specsync {

// Eigenpairs of a symmetric matrix: ascending values, orthonormal column
// vectors, each vector signed so its first non-negligible component is
// positive.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

// Cyclic Jacobi rotations. Throws InvalidInput for non-symmetric input
// (tolerance 1e-10 relative to the largest entry) and ConvergenceError if
// the sweep cap is exceeded.
SymmetricEigen eigendecompose(const Matrix& a, int max_sweeps = 100);

// Real eigenpairs of a general square matrix, intended for quotient
// Laplacians (similar to a symmetric matrix, hence real spectrum). Vectors
// are unit-norm columns, sorted by ascending eigenvalue, same sign rule as
// above. Throws InvalidInput if an eigenvalue has an imaginary part beyond
// `imag_tol`, ConvergenceError if a residual check fails.
struct RealEigen {
  Vector values;
  Matrix vectors;
};
RealEigen eigendecompose_general(const Matrix& m, double imag_tol = 1e-8);

// Laplacian eigenbasis of a graph together with the paired edge vectors
// e^(r) = B^T v^(r) of the down-edge Laplacian.
struct SpectralBasis {
  Vector eigenvalues;    // n, ascending
  Matrix vertex_vectors; // n x n, column r is v^(r)
  Matrix edge_vectors;   // m x n, column r is e^(r)
  Vector edge_weights;   // m, canonical edge order
  Vector orientation;    // m, +1/-1 per edge relative to the canonical i<j

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  std::size_t num_edges() const { return static_cast<std::size_t>(edge_weights.size()); }

  static SpectralBasis from_graph(const WeightedGraph& g,
                                  std::span<const double> orientation = {});
};

// Spectral coefficients alpha_r = v^(r) . theta.
Vector decompose(const Vector& theta, const SpectralBasis& basis);
Vector reconstruct(const Vector& alpha, const SpectralBasis& basis);

// Modes whose eigenvector is constant on every cell of `p`. Inside a block
// of (numerically) repeated eigenvalues the individual vectors are
// arbitrary, so the block's eigenspace is intersected with the column space
// of P instead and as many of the block's indices are returned as that
// intersection has dimensions.
std::vector<std::size_t> structural_indices(const SpectralBasis& basis,
                                            const VertexPartition& p,
                                            double tol = 1e-8);

// Groups of mode indices whose eigenvalues lie within `gap` of their
// neighbour.
std::vector<std::vector<std::size_t>> degenerate_blocks(const Vector& eigenvalues,
                                                        double gap = 1e-8);

}  // namespace specsync
