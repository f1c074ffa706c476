#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "specsync/types.hpp"

namespace specsync {

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double w = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Connected, undirected, positively weighted simple graph.
//
// Edges are stored with i < j and sorted by (i, j); that order fixes the
// orientation of the incidence matrix and the indexing of per-edge data
// such as phase lags. Input pairs may be given in either order; repeated
// pairs are merged by summing their weights (a warning is recorded).
class WeightedGraph {
 public:
  WeightedGraph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Sum of incident edge weights per vertex.
  Vector strengths() const;
  Vector edge_weights() const;

  friend bool operator==(const WeightedGraph& a, const WeightedGraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::string> warnings_;
};

// Breadth-first reachability from vertex 0 over the given edge list.
bool is_connected(std::size_t n, std::span<const Edge> edges);

// Assignment of each vertex to one of k cells, cells numbered 0..k-1, every
// cell non-empty.
class VertexPartition {
 public:
  explicit VertexPartition(std::vector<std::size_t> assignment);

  std::size_t num_vertices() const { return assignment_.size(); }
  std::size_t num_cells() const { return k_; }
  std::size_t cell_of(std::size_t v) const { return assignment_[v]; }
  const std::vector<std::size_t>& assignment() const { return assignment_; }
  std::vector<std::size_t> cell_sizes() const;
  std::vector<std::vector<std::size_t>> cells() const;

  static VertexPartition trivial(std::size_t n);
  static VertexPartition discrete(std::size_t n);

  friend bool operator==(const VertexPartition&, const VertexPartition&) = default;

 private:
  std::vector<std::size_t> assignment_;
  std::size_t k_ = 0;
};

Matrix adjacency(const WeightedGraph& g);
Matrix laplacian(const WeightedGraph& g);

// Signed incidence matrix B (n x m): +1 at the lower endpoint, -1 at the
// upper one. `orientation`, if given, holds +1/-1 per edge and flips the
// corresponding columns.
Matrix incidence(const WeightedGraph& g, std::span<const double> orientation = {});

// Diagonal edge-weight matrix W (m x m).
Matrix weight_matrix(const WeightedGraph& g);

// B^T B W; shares its nonzero spectrum with the Laplacian.
Matrix down_edge_laplacian(const WeightedGraph& g);

Matrix indicator_matrix(const VertexPartition& p);

// (P^T P)^{-1} P^T M P.
Matrix quotient_matrix(const Matrix& m, const VertexPartition& p);

}  // namespace specsync
