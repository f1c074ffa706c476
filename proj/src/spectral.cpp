#include "specsync/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace specsync {
namespace {

constexpr double kSignThreshold = 1e-10;

void fix_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    for (Index r = 0; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) > kSignThreshold) {
        if (vectors(r, c) < 0.0) vectors.col(c) *= -1.0;
        break;
      }
    }
  }
}

template <typename Pairs>
void sort_ascending(Pairs& out) {
  const Index n = out.values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return out.values[a] < out.values[b]; });
  Vector values(n);
  Matrix vectors(out.vectors.rows(), n);
  for (Index k = 0; k < n; ++k) {
    values[k] = out.values[order[static_cast<std::size_t>(k)]];
    vectors.col(k) = out.vectors.col(order[static_cast<std::size_t>(k)]);
  }
  out.values = std::move(values);
  out.vectors = std::move(vectors);
}

}  // namespace

SymmetricEigen eigendecompose(const Matrix& input, int max_sweeps) {
  if (input.rows() != input.cols()) throw InvalidInput("eigendecompose: matrix is not square");
  const Index n = input.rows();
  const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
  if ((input - input.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput("eigendecompose: matrix is not symmetric");
  }

  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double frob = a.norm();

  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (Index q = 1; q < n; ++q) {
      for (Index p = 0; p < q; ++p) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) <= 1e-15 * frob || off == 0.0) {
      converged = true;
      break;
    }

    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g = 100.0 * std::abs(apq);
        // After a few sweeps an element this small no longer changes either
        // diagonal entry; zero it instead of rotating.
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        if (apq == 0.0) continue;

        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p) - t * apq;
        const double aqq = a(q, q) + t * apq;

        for (Index r = 0; r < n; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (Index r = 0; r < n; ++r) {
          a(p, r) = a(r, p);
          a(q, r) = a(r, q);
        }
        a(p, p) = app;
        a(q, q) = aqq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (Index r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (Index q = 1; q < n; ++q) {
      for (Index p = 0; p < q; ++p) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) > 1e-12 * std::max(frob, 1.0)) {
      throw ConvergenceError("eigendecompose: Jacobi sweep cap exceeded");
    }
  }

  SymmetricEigen out{a.diagonal(), std::move(v)};
  sort_ascending(out);
  fix_signs(out.vectors);
  return out;
}

RealEigen eigendecompose_general(const Matrix& m, double imag_tol) {
  if (m.rows() != m.cols()) throw InvalidInput("eigendecompose_general: matrix is not square");
  Eigen::EigenSolver<Matrix> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eigendecompose_general: eigensolver did not converge");
  }
  const auto& lambda = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  RealEigen out{Vector(m.rows()), Matrix(m.rows(), m.cols())};
  for (Index k = 0; k < m.rows(); ++k) {
    if (std::abs(lambda[k].imag()) > imag_tol * std::max(1.0, std::abs(lambda[k]))) {
      std::ostringstream os;
      os << "eigendecompose_general: complex eigenvalue " << lambda[k].real() << " + "
         << lambda[k].imag() << "i";
      throw InvalidInput(os.str());
    }
    out.values[k] = lambda[k].real();
    Vector col = vecs.col(k).real();
    const double nrm = col.norm();
    if (nrm == 0.0) throw ConvergenceError("eigendecompose_general: zero eigenvector");
    out.vectors.col(k) = col / nrm;
  }
  sort_ascending(out);
  fix_signs(out.vectors);

  const double scale = std::max(1.0, m.norm());
  for (Index k = 0; k < m.rows(); ++k) {
    const double residual = (m * out.vectors.col(k) - out.values[k] * out.vectors.col(k)).norm();
    if (residual > 1e-8 * scale) {
      throw ConvergenceError("eigendecompose_general: residual check failed");
    }
  }
  return out;
}

SpectralBasis SpectralBasis::from_graph(const WeightedGraph& g,
                                        std::span<const double> orientation) {
  const SymmetricEigen eig = eigendecompose(laplacian(g));
  const Matrix b = incidence(g, orientation);
  SpectralBasis basis;
  basis.eigenvalues = eig.values;
  basis.vertex_vectors = eig.vectors;
  basis.edge_vectors = b.transpose() * eig.vectors;
  basis.edge_weights = g.edge_weights();
  basis.orientation = Vector::Ones(static_cast<Index>(g.num_edges()));
  for (std::size_t a = 0; a < orientation.size(); ++a) {
    basis.orientation[static_cast<Index>(a)] = orientation[a];
  }
  return basis;
}

Vector decompose(const Vector& theta, const SpectralBasis& basis) {
  if (theta.size() != basis.vertex_vectors.rows()) {
    throw InvalidInput("decompose: vector length does not match the basis");
  }
  return basis.vertex_vectors.transpose() * theta;
}

Vector reconstruct(const Vector& alpha, const SpectralBasis& basis) {
  if (alpha.size() != basis.vertex_vectors.cols()) {
    throw InvalidInput("reconstruct: coefficient length does not match the basis");
  }
  return basis.vertex_vectors * alpha;
}

std::vector<std::vector<std::size_t>> degenerate_blocks(const Vector& eigenvalues, double gap) {
  std::vector<std::vector<std::size_t>> blocks;
  for (Index r = 0; r < eigenvalues.size(); ++r) {
    if (r == 0 || eigenvalues[r] - eigenvalues[r - 1] >= gap) blocks.emplace_back();
    blocks.back().push_back(static_cast<std::size_t>(r));
  }
  return blocks;
}

std::vector<std::size_t> structural_indices(const SpectralBasis& basis,
                                            const VertexPartition& p, double tol) {
  const Index n = basis.vertex_vectors.rows();
  if (static_cast<Index>(p.num_vertices()) != n) {
    throw InvalidInput("structural_indices: partition size does not match the basis");
  }
  // Orthonormal basis of col(P): normalized indicator columns.
  Matrix q = indicator_matrix(p);
  const auto sizes = p.cell_sizes();
  for (Index c = 0; c < q.cols(); ++c) {
    q.col(c) /= std::sqrt(static_cast<double>(sizes[static_cast<std::size_t>(c)]));
  }

  std::vector<std::size_t> out;
  for (const auto& block : degenerate_blocks(basis.eigenvalues)) {
    if (block.size() == 1) {
      const Vector v = basis.vertex_vectors.col(static_cast<Index>(block.front()));
      const Vector residual = v - q * (q.transpose() * v);
      if (residual.cwiseAbs().maxCoeff() <= tol) out.push_back(block.front());
      continue;
    }
    // Rotate the eigenspace onto its principal vectors relative to col(P)
    // (ascending distance), then measure each rotated vector directly.
    Matrix vb(n, static_cast<Index>(block.size()));
    for (std::size_t k = 0; k < block.size(); ++k) {
      vb.col(static_cast<Index>(k)) = basis.vertex_vectors.col(static_cast<Index>(block[k]));
    }
    const Matrix residual = vb - q * (q.transpose() * vb);
    const SymmetricEigen angles = eigendecompose(residual.transpose() * residual);
    const Matrix rotated_residual = residual * angles.vectors;
    std::size_t inside = 0;
    for (Index k = 0; k < rotated_residual.cols(); ++k) {
      if (rotated_residual.col(k).cwiseAbs().maxCoeff() <= tol) ++inside;
    }
    for (std::size_t k = 0; k < inside; ++k) out.push_back(block[k]);
  }
  return out;
}

}  // namespace specsync
