#include "specsync/partition_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace specsync {
namespace {

void require_matching(const WeightedGraph& g, const VertexPartition& p) {
  if (g.num_vertices() != p.num_vertices()) {
    throw InvalidInput("partition covers " + std::to_string(p.num_vertices()) +
                       " vertices but the graph has " + std::to_string(g.num_vertices()));
  }
}

// Out-weight of every vertex into every cell.
Matrix cell_out_weights(const WeightedGraph& g, const VertexPartition& p) {
  Matrix out = Matrix::Zero(static_cast<Index>(g.num_vertices()),
                            static_cast<Index>(p.num_cells()));
  for (const Edge& e : g.edges()) {
    out(static_cast<Index>(e.i), static_cast<Index>(p.cell_of(e.j))) += e.w;
    out(static_cast<Index>(e.j), static_cast<Index>(p.cell_of(e.i))) += e.w;
  }
  return out;
}

}  // namespace

Matrix equitable_error_matrix(const Matrix& l, const VertexPartition& p) {
  if (l.rows() != l.cols() || l.rows() != static_cast<Index>(p.num_vertices())) {
    throw InvalidInput("equitable_error_matrix: matrix must be n x n for the partition's n");
  }
  const Matrix ind = indicator_matrix(p);
  return ind * quotient_matrix(l, p) - l * ind;
}

double largest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.cols() <= m.rows() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  const SymmetricEigen eig = eigendecompose(gram);
  return std::sqrt(std::max(0.0, eig.values.maxCoeff()));
}

AepReport check_aep(const WeightedGraph& g, const VertexPartition& p, double tol) {
  require_matching(g, p);
  AepReport report;

  const Matrix out = cell_out_weights(g, p);
  const auto sizes = p.cell_sizes();
  Matrix cell_mean = Matrix::Zero(static_cast<Index>(p.num_cells()), out.cols());
  for (std::size_t v = 0; v < p.num_vertices(); ++v) {
    cell_mean.row(static_cast<Index>(p.cell_of(v))) += out.row(static_cast<Index>(v));
  }
  for (Index c = 0; c < cell_mean.rows(); ++c) {
    cell_mean.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
  }
  double comb = 0.0;
  for (std::size_t v = 0; v < p.num_vertices(); ++v) {
    const auto cv = static_cast<Index>(p.cell_of(v));
    for (Index q = 0; q < out.cols(); ++q) {
      if (q == cv) continue;
      comb = std::max(comb, std::abs(out(static_cast<Index>(v), q) - cell_mean(cv, q)));
    }
  }
  report.combinatorial_max_deviation = comb;
  report.combinatorial_is_aep = comb <= tol;

  report.per_vertex_deviations = equitable_error_matrix(laplacian(g), p);
  report.max_deviation =
      report.per_vertex_deviations.size() ? report.per_vertex_deviations.cwiseAbs().maxCoeff() : 0.0;
  report.is_aep = report.max_deviation <= tol;
  return report;
}

std::vector<QuotientMode> quotient_modes(const WeightedGraph& g, const VertexPartition& p) {
  require_matching(g, p);
  const RealEigen eig = eigendecompose_general(quotient_matrix(laplacian(g), p));
  std::vector<QuotientMode> modes;
  for (Index k = 0; k < eig.values.size(); ++k) {
    modes.push_back({eig.values[k], eig.vectors.col(k)});
  }
  return modes;
}

EquitableErrorReport equitable_error(const Matrix& l, const VertexPartition& p) {
  EquitableErrorReport report;
  report.e = equitable_error_matrix(l, p);
  report.sigma1 = largest_singular_value(report.e);
  report.max_row_sum = report.e.rows() ? report.e.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  const double k = static_cast<double>(p.num_cells());
  report.rowsum_bound_holds = report.sigma1 <= 2.0 * k * report.max_row_sum * (1.0 + 1e-12) + 1e-15;

  const RealEigen eig = eigendecompose_general(quotient_matrix(l, p));
  for (Index c = 0; c < eig.values.size(); ++c) {
    ModeErrorBound mode;
    mode.eigenvalue = eig.values[c];
    mode.eigenvector = eig.vectors.col(c);
    const double vnorm = mode.eigenvector.norm();
    mode.epsilon_norm = (report.e * mode.eigenvector).norm();
    mode.bound_sigma = report.sigma1 * vnorm;
    mode.bound_rowsum = 2.0 * k * vnorm * report.max_row_sum;
    report.per_mode.push_back(std::move(mode));
  }
  return report;
}

EquitableErrorReport equitable_error(const WeightedGraph& g, const VertexPartition& p) {
  require_matching(g, p);
  return equitable_error(laplacian(g), p);
}

ApproximationBoundReport approximation_bound(const WeightedGraph& g, const VertexPartition& p,
                                             const SpectralBasis& basis,
                                             const QuotientMode& mode, double gamma) {
  require_matching(g, p);
  if (!(gamma > 0.0)) throw InvalidInput("approximation_bound: gamma must be positive");
  if (mode.vector.size() != static_cast<Index>(p.num_cells())) {
    throw InvalidInput("approximation_bound: quotient eigenvector has the wrong length");
  }
  ApproximationBoundReport report;
  report.eigenvalue = mode.eigenvalue;
  report.gamma = gamma;
  report.lifted = indicator_matrix(p) * mode.vector;
  report.approximation = Vector::Zero(report.lifted.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (std::abs(basis.eigenvalues[static_cast<Index>(i)] - mode.eigenvalue) <= gamma) {
      report.retained.push_back(i);
      const auto col = basis.vertex_vectors.col(static_cast<Index>(i));
      report.approximation += col.dot(report.lifted) * col;
    }
  }
  report.actual_error = (report.lifted - report.approximation).norm();
  report.delta = (equitable_error_matrix(laplacian(g), p) * mode.vector).norm();
  const double dropped = static_cast<double>(basis.size() - report.retained.size());
  report.bound = (report.delta / gamma) * std::sqrt(dropped);
  return report;
}

double qep_score(const WeightedGraph& g, const VertexPartition& p) {
  require_matching(g, p);
  const double mean_strength = g.strengths().mean();
  return largest_singular_value(equitable_error_matrix(laplacian(g), p)) / mean_strength;
}

}  // namespace specsync
