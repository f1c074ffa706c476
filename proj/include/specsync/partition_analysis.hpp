#pragma once

#include <cstddef>
#include <vector>

#include "specsync/graph.hpp"
#include "specsync/spectral.hpp"
#include "specsync/types.hpp"

namespace specsync {

// Almost-equitable-partition check. `per_vertex_deviations` is the n x k
// equitable error matrix E = P L^pi - L P; entry (i, q) for q != cell(i) is
// vertex i's out-weight into cell q minus its cell's average.
struct AepReport {
  bool is_aep = false;
  double max_deviation = 0.0;          // max |E_iq|
  Matrix per_vertex_deviations;
  bool combinatorial_is_aep = false;   // from direct out-weight sums
  double combinatorial_max_deviation = 0.0;
};

AepReport check_aep(const WeightedGraph& g, const VertexPartition& p, double tol = 1e-9);

// E = P L^pi - L P for an arbitrary n x n matrix L.
Matrix equitable_error_matrix(const Matrix& l, const VertexPartition& p);

double largest_singular_value(const Matrix& m);

struct ModeErrorBound {
  double eigenvalue = 0.0;
  Vector eigenvector;          // unit-norm quotient eigenvector v
  double epsilon_norm = 0.0;   // ||E v||
  double bound_sigma = 0.0;    // sigma_1(E) ||v||
  double bound_rowsum = 0.0;   // 2k ||v|| max_i sum_j |e_ij|
};

struct EquitableErrorReport {
  Matrix e;
  double sigma1 = 0.0;
  double max_row_sum = 0.0;
  std::vector<ModeErrorBound> per_mode;
  // sigma_1(E) <= 2k max-row-sum is only guaranteed for n <= 4k^2; in
  // general the operator 2-norm is bounded by sqrt(n) max-row-sum.
  bool rowsum_bound_holds = false;
};

EquitableErrorReport equitable_error(const WeightedGraph& g, const VertexPartition& p);
EquitableErrorReport equitable_error(const Matrix& l, const VertexPartition& p);

struct QuotientMode {
  double eigenvalue = 0.0;
  Vector vector;
};

// Eigenpairs of the quotient Laplacian, ascending, unit vectors.
std::vector<QuotientMode> quotient_modes(const WeightedGraph& g, const VertexPartition& p);

struct ApproximationBoundReport {
  double eigenvalue = 0.0;
  double gamma = 0.0;
  std::vector<std::size_t> retained;   // modes with |lambda_i - lambda| <= gamma
  Vector lifted;                       // P v
  Vector approximation;                // u
  double actual_error = 0.0;           // ||P v - u||
  double delta = 0.0;                  // ||E v||
  double bound = 0.0;                  // (delta / gamma) sqrt(n - |A|)
};

// Truncated approximation of the lifted quotient eigenvector by the graph
// eigenvectors whose eigenvalues are within gamma of the quotient eigenvalue.
ApproximationBoundReport approximation_bound(const WeightedGraph& g, const VertexPartition& p,
                                             const SpectralBasis& basis,
                                             const QuotientMode& mode, double gamma);

// sigma_1(E) divided by the mean vertex strength; 0 for an exact AEP.
double qep_score(const WeightedGraph& g, const VertexPartition& p);

}  // namespace specsync
