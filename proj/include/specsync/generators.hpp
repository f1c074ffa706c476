#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "specsync/graph.hpp"
#include "specsync/types.hpp"

namespace specsync {

// Cells occupy contiguous vertex ranges in the order of `cell_sizes`.
// quotient_weights(i, j) is the total weight every vertex of cell i sends
// into cell j; undirected graphs need |V_i| d_ij = |V_j| d_ji.
struct PlantedAepConfig {
  std::vector<std::size_t> cell_sizes;
  Matrix quotient_weights;
  double intra_density = 0.5;
  std::pair<double, double> intra_weight_range{0.5, 1.5};
  // Fraction of cross-cell vertex pairs that carry an edge; 1 gives complete
  // bipartite blocks between cells with d_ij > 0.
  double cross_density = 1.0;
  std::uint64_t seed = 0;
};

struct PlantedGraph {
  WeightedGraph graph;
  VertexPartition partition;
};

PlantedGraph planted_aep(const PlantedAepConfig& cfg);

// Hierarchy of nested AEPs. `branching` lists the number of children per
// node from the root down; the leaves are cells of `leaf_size` vertices.
// level_weights[l] is the per-vertex weight a leaf sends to each leaf that
// first separates from it at depth l; each pair of sibling subtrees gets an
// independent factor (1 + jitter u), u in [-1, 1], which keeps every level
// an exact AEP while splitting repeated eigenvalues.
struct NestedAepConfig {
  std::vector<std::size_t> branching;
  std::size_t leaf_size = 1;
  std::vector<double> level_weights;
  double intra_density = 0.5;
  std::pair<double, double> intra_weight_range{0.5, 1.5};
  double cross_density = 1.0;
  double jitter = 0.0;
  int max_attempts = 8;
  std::uint64_t seed = 0;
};

struct NestedGraph {
  WeightedGraph graph;
  // partitions[l] has one cell per subtree at depth l + 1; the last entry is
  // the leaf partition.
  std::vector<VertexPartition> partitions;
};

// Verifies that the structural modes of every level form the prefix of the
// spectrum, coarsest level lowest. On failure the cross weights of the
// offending levels are halved and a fresh sample drawn, up to
// `max_attempts`; then InvalidInput.
NestedGraph nested_aep(const NestedAepConfig& cfg);

// Multiplies each weight by (1 + u), u uniform in [-eta, eta]; results are
// clamped to a small positive floor. `p` only has to match the graph size.
WeightedGraph perturb(const WeightedGraph& g, const VertexPartition& p, double eta, std::uint64_t seed);

struct SbmConfig {
  std::vector<std::size_t> block_sizes;
  Matrix probabilities;
  std::uint64_t seed = 0;
  int max_attempts = 100;
};

// Unit-weight simple graph with contiguous blocks, resampled until
// connected. Throws InvalidInput when the attempt cap is hit.
PlantedGraph sample_sbm(const SbmConfig& cfg);

// Laplacian of the SBM edge-probability matrix (zero diagonal adjacency).
Matrix expected_sbm_laplacian(const SbmConfig& cfg);

}  // namespace specsync
