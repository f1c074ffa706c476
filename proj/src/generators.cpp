#include "specsync/generators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "specsync/rng.hpp"
#include "specsync/spectral.hpp"

namespace specsync {
namespace {

void check_weight_range(const std::pair<double, double>& r) {
  if (!(r.first > 0.0) || !(r.second >= r.first) || !std::isfinite(r.second)) {
    throw InvalidInput("intra_weight_range must satisfy 0 < lo <= hi");
  }
}

// Non-negative block with prescribed row and column sums, all rows and
// columns touched, through iterative proportional fitting of a random
// positive matrix.
Matrix fitted_block(const Vector& rows, const Vector& cols, Rng& rng) {
  Matrix x(rows.size(), cols.size());
  for (Index a = 0; a < x.rows(); ++a) {
    for (Index b = 0; b < x.cols(); ++b) x(a, b) = rng.uniform(0.5, 1.5);
  }
  const double scale = rows.maxCoeff();
  for (int it = 0; it < 10000; ++it) {
    x.array().colwise() *= (rows.array() / x.rowwise().sum().array());
    x.array().rowwise() *= (cols.array() / x.colwise().sum().transpose().array()).transpose();
    if ((x.rowwise().sum() - rows).cwiseAbs().maxCoeff() <= 1e-14 * scale) return x;
  }
  if ((x.rowwise().sum() - rows).cwiseAbs().maxCoeff() > 1e-11 * scale) {
    throw ConvergenceError("cross-cell weight fitting did not converge");
  }
  return x;
}

// North-west corner transport plan for the given row/column order.
Matrix staircase(const Vector& rows, const Vector& cols, const std::vector<std::size_t>& row_order,
                 const std::vector<std::size_t>& col_order) {
  Matrix x = Matrix::Zero(rows.size(), cols.size());
  const double eps = 1e-12 * std::max(rows.maxCoeff(), cols.maxCoeff());
  std::size_t a = 0, b = 0;
  double supply = rows[static_cast<Index>(row_order[0])];
  double demand = cols[static_cast<Index>(col_order[0])];
  while (a < row_order.size() && b < col_order.size()) {
    const double t = std::min(supply, demand);
    x(static_cast<Index>(row_order[a]), static_cast<Index>(col_order[b])) += t;
    supply -= t;
    demand -= t;
    const bool next_row = supply <= eps;
    const bool next_col = demand <= eps;
    if (next_row && ++a < row_order.size()) supply = rows[static_cast<Index>(row_order[a])];
    if (next_col && ++b < col_order.size()) demand = cols[static_cast<Index>(col_order[b])];
    if (!next_row && !next_col) break;
  }
  return x;
}

Matrix sparse_block(const Vector& rows, const Vector& cols, double density, Rng& rng) {
  const auto nr = static_cast<std::size_t>(rows.size());
  const auto nc = static_cast<std::size_t>(cols.size());
  const double per_plan = static_cast<double>(nr + nc - 1);
  const auto plans = static_cast<std::size_t>(
      std::max(1.0, std::ceil(density * static_cast<double>(nr * nc) / per_plan)));
  std::vector<double> mix(plans);
  for (auto& m : mix) m = rng.uniform(0.5, 1.5);
  const double total = std::accumulate(mix.begin(), mix.end(), 0.0);
  Matrix x = Matrix::Zero(rows.size(), cols.size());
  for (std::size_t q = 0; q < plans; ++q) {
    const auto ro = rng.permutation(nr);
    const auto co = rng.permutation(nc);
    x += (mix[q] / total) * staircase(rows, cols, ro, co);
  }
  return x;
}

std::vector<std::size_t> offsets_of(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> off(sizes.size() + 1, 0);
  for (std::size_t i = 0; i < sizes.size(); ++i) off[i + 1] = off[i] + sizes[i];
  return off;
}

void add_intra_edges(std::vector<Edge>& edges, std::size_t first, std::size_t size, double density,
                     const std::pair<double, double>& range, Rng& rng) {
  if (size < 2) return;
  std::vector<std::vector<bool>> used(size, std::vector<bool>(size, false));
  const auto order = rng.permutation(size);
  for (std::size_t t = 0; t + 1 < size; ++t) {
    const std::size_t a = std::min(order[t], order[t + 1]);
    const std::size_t b = std::max(order[t], order[t + 1]);
    used[a][b] = true;
    edges.push_back({first + a, first + b, rng.uniform(range.first, range.second)});
  }
  for (std::size_t a = 0; a < size; ++a) {
    for (std::size_t b = a + 1; b < size; ++b) {
      if (used[a][b]) continue;
      if (rng.bernoulli(density)) edges.push_back({first + a, first + b, rng.uniform(range.first, range.second)});
    }
  }
}

}  // namespace

PlantedGraph planted_aep(const PlantedAepConfig& cfg) {
  const std::size_t k = cfg.cell_sizes.size();
  if (k == 0) throw InvalidInput("planted_aep: no cells");
  for (auto s : cfg.cell_sizes) {
    if (s == 0) throw InvalidInput("planted_aep: empty cell");
  }
  const Matrix& d = cfg.quotient_weights;
  if (static_cast<std::size_t>(d.rows()) != k || static_cast<std::size_t>(d.cols()) != k) {
    throw InvalidInput("planted_aep: quotient_weights must be k x k");
  }
  if (!(cfg.intra_density >= 0.0 && cfg.intra_density <= 1.0)) {
    throw InvalidInput("planted_aep: intra_density must lie in [0, 1]");
  }
  if (!(cfg.cross_density > 0.0)) throw InvalidInput("planted_aep: cross_density must be positive");
  check_weight_range(cfg.intra_weight_range);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Index>(i);
    if (d(ii, ii) != 0.0) throw InvalidInput("planted_aep: quotient_weights diagonal must be zero");
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Index>(j);
      if (!std::isfinite(d(ii, jj)) || d(ii, jj) < 0.0) {
        throw InvalidInput("planted_aep: quotient weights must be finite and non-negative");
      }
      const double lhs = static_cast<double>(cfg.cell_sizes[i]) * d(ii, jj);
      const double rhs = static_cast<double>(cfg.cell_sizes[j]) * d(jj, ii);
      if (std::abs(lhs - rhs) > 1e-12 * std::max({1.0, lhs, rhs})) {
        throw InvalidInput("planted_aep: need |V_i| d_ij = |V_j| d_ji for cells " + std::to_string(i) +
                           ", " + std::to_string(j));
      }
    }
  }

  Rng rng(cfg.seed);
  const auto off = offsets_of(cfg.cell_sizes);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < k; ++i) {
    add_intra_edges(edges, off[i], cfg.cell_sizes[i], cfg.intra_density, cfg.intra_weight_range, rng);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double dij = d(static_cast<Index>(i), static_cast<Index>(j));
      if (dij == 0.0) continue;
      const Vector rows = Vector::Constant(static_cast<Index>(cfg.cell_sizes[i]), dij);
      const Vector cols = Vector::Constant(static_cast<Index>(cfg.cell_sizes[j]),
                                           d(static_cast<Index>(j), static_cast<Index>(i)));
      const Matrix x = cfg.cross_density >= 1.0 ? fitted_block(rows, cols, rng)
                                                : sparse_block(rows, cols, cfg.cross_density, rng);
      for (Index a = 0; a < x.rows(); ++a) {
        for (Index b = 0; b < x.cols(); ++b) {
          if (x(a, b) > 0.0) {
            edges.push_back({off[i] + static_cast<std::size_t>(a), off[j] + static_cast<std::size_t>(b), x(a, b)});
          }
        }
      }
    }
  }

  std::vector<std::size_t> assignment(off.back());
  for (std::size_t i = 0; i < k; ++i) {
    std::fill(assignment.begin() + static_cast<std::ptrdiff_t>(off[i]),
              assignment.begin() + static_cast<std::ptrdiff_t>(off[i + 1]), i);
  }
  if (!is_connected(off.back(), edges)) {
    throw InvalidInput("planted_aep: quotient weights leave the cells disconnected");
  }
  return {WeightedGraph(off.back(), std::move(edges)), VertexPartition(std::move(assignment))};
}

NestedGraph nested_aep(const NestedAepConfig& cfg) {
  const std::size_t levels = cfg.branching.size();
  if (levels == 0) throw InvalidInput("nested_aep: need at least one level");
  if (cfg.level_weights.size() != levels) {
    throw InvalidInput("nested_aep: need one weight per level");
  }
  for (auto b : cfg.branching) {
    if (b < 2) throw InvalidInput("nested_aep: branching factors must be at least 2");
  }
  if (cfg.leaf_size == 0) throw InvalidInput("nested_aep: leaf_size must be positive");
  for (double w : cfg.level_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("nested_aep: level weights must be positive");
  }
  if (!(cfg.jitter >= 0.0 && cfg.jitter < 1.0)) throw InvalidInput("nested_aep: jitter must lie in [0, 1)");

  // span[d]: number of leaves below one node at depth d.
  std::vector<std::size_t> span(levels + 1, 1);
  for (std::size_t d = levels; d-- > 0;) span[d] = span[d + 1] * cfg.branching[d];
  const std::size_t leaves = span[0];

  std::vector<double> weights = cfg.level_weights;
  Rng rng(cfg.seed);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    std::map<std::pair<std::size_t, std::size_t>, double> factor;
    Matrix d = Matrix::Zero(static_cast<Index>(leaves), static_cast<Index>(leaves));
    for (std::size_t a = 0; a < leaves; ++a) {
      for (std::size_t b = a + 1; b < leaves; ++b) {
        std::size_t level = 0;
        while (a / span[level + 1] == b / span[level + 1]) ++level;
        const auto key = std::make_pair(a / span[level + 1], b / span[level + 1]);
        auto it = factor.find(key);
        if (it == factor.end()) it = factor.emplace(key, 1.0 + cfg.jitter * rng.uniform(-1.0, 1.0)).first;
        const double w = weights[level] * it->second;
        d(static_cast<Index>(a), static_cast<Index>(b)) = w;
        d(static_cast<Index>(b), static_cast<Index>(a)) = w;
      }
    }
    PlantedAepConfig pc;
    pc.cell_sizes.assign(leaves, cfg.leaf_size);
    pc.quotient_weights = d;
    pc.intra_density = cfg.intra_density;
    pc.intra_weight_range = cfg.intra_weight_range;
    pc.cross_density = cfg.cross_density;
    pc.seed = rng.next();
    PlantedGraph planted = planted_aep(pc);

    std::vector<VertexPartition> parts;
    for (std::size_t depth = 1; depth <= levels; ++depth) {
      std::vector<std::size_t> assignment(planted.graph.num_vertices());
      for (std::size_t v = 0; v < assignment.size(); ++v) {
        assignment[v] = planted.partition.cell_of(v) / span[depth];
      }
      parts.emplace_back(std::move(assignment));
    }

    const SpectralBasis basis = SpectralBasis::from_graph(planted.graph);
    std::size_t failed = levels;
    for (std::size_t l = 0; l < levels && failed == levels; ++l) {
      const auto idx = structural_indices(basis, parts[l]);
      std::vector<std::size_t> prefix(parts[l].num_cells());
      std::iota(prefix.begin(), prefix.end(), std::size_t{0});
      if (idx != prefix) failed = l;
    }
    if (failed == levels) return {std::move(planted.graph), std::move(parts)};
    const std::size_t upto = failed + 1 == levels ? levels : failed + 1;
    for (std::size_t l = 0; l < upto; ++l) weights[l] *= 0.5;
  }
  throw InvalidInput("nested_aep: spectral ordering of the levels not achieved within the attempt cap");
}

WeightedGraph perturb(const WeightedGraph& g, const VertexPartition& p, double eta, std::uint64_t seed) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidInput("perturb: eta must be non-negative");
  if (p.num_vertices() != g.num_vertices()) throw InvalidInput("perturb: partition size mismatch");
  Rng rng(seed);
  std::vector<Edge> edges = g.edges();
  for (auto& e : edges) {
    const double u = rng.uniform(-eta, eta);
    e.w = std::max(e.w * (1.0 + u), 1e-12 * e.w);
  }
  return WeightedGraph(g.num_vertices(), std::move(edges));
}

namespace {

std::vector<std::size_t> validate_sbm(const SbmConfig& cfg) {
  const std::size_t k = cfg.block_sizes.size();
  if (k == 0) throw InvalidInput("sample_sbm: no blocks");
  const Matrix& pr = cfg.probabilities;
  if (static_cast<std::size_t>(pr.rows()) != k || static_cast<std::size_t>(pr.cols()) != k) {
    throw InvalidInput("sample_sbm: probability matrix must be k x k");
  }
  for (Index a = 0; a < pr.rows(); ++a) {
    for (Index b = 0; b < pr.cols(); ++b) {
      if (!(pr(a, b) >= 0.0 && pr(a, b) <= 1.0)) throw InvalidInput("sample_sbm: probabilities must lie in [0, 1]");
      if (pr(a, b) != pr(b, a)) throw InvalidInput("sample_sbm: probability matrix must be symmetric");
    }
  }
  std::vector<std::size_t> block;
  for (std::size_t q = 0; q < k; ++q) {
    if (cfg.block_sizes[q] == 0) throw InvalidInput("sample_sbm: empty block");
    block.insert(block.end(), cfg.block_sizes[q], q);
  }
  return block;
}

}  // namespace

PlantedGraph sample_sbm(const SbmConfig& cfg) {
  const auto block = validate_sbm(cfg);
  const std::size_t n = block.size();
  Rng rng(cfg.seed);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.bernoulli(cfg.probabilities(static_cast<Index>(block[i]), static_cast<Index>(block[j])))) {
          edges.push_back({i, j, 1.0});
        }
      }
    }
    if (is_connected(n, edges)) return {WeightedGraph(n, std::move(edges)), VertexPartition(block)};
  }
  throw InvalidInput("sample_sbm: no connected sample within " + std::to_string(cfg.max_attempts) + " attempts");
}

Matrix expected_sbm_laplacian(const SbmConfig& cfg) {
  const auto block = validate_sbm(cfg);
  const auto n = static_cast<Index>(block.size());
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      a(i, j) = i == j ? 0.0 : cfg.probabilities(static_cast<Index>(block[static_cast<std::size_t>(i)]),
                                                 static_cast<Index>(block[static_cast<std::size_t>(j)]));
    }
  }
  Matrix l = -a;
  l.diagonal() = a.rowwise().sum();
  return l;
}

}  // namespace specsync
