#include "specsync/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <utility>

namespace specsync {

WeightedGraph::WeightedGraph(std::size_t n, std::vector<Edge> edges) : n_(n) {
  if (n == 0) throw InvalidInput("graph must have at least one vertex");

  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const Edge& e : edges) {
    if (e.i >= n || e.j >= n) {
      std::ostringstream os;
      os << "edge (" << e.i << ", " << e.j << ") out of range for n = " << n;
      throw InvalidInput(os.str());
    }
    if (e.i == e.j) {
      throw InvalidInput("self-loop at vertex " + std::to_string(e.i));
    }
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      std::ostringstream os;
      os << "edge (" << e.i << ", " << e.j << ") has non-positive weight " << e.w;
      throw InvalidInput(os.str());
    }
    const auto key = std::minmax(e.i, e.j);
    auto [it, inserted] = merged.emplace(key, e.w);
    if (!inserted) {
      it->second += e.w;
      std::ostringstream os;
      os << "duplicate edge (" << key.first << ", " << key.second
         << ") merged by summing weights";
      warnings_.push_back(os.str());
    }
  }

  edges_.reserve(merged.size());
  for (const auto& [key, w] : merged) edges_.push_back({key.first, key.second, w});

  if (!is_connected(n_, edges_)) throw InvalidInput("graph is not connected");
}

Vector WeightedGraph::strengths() const {
  Vector s = Vector::Zero(static_cast<Index>(n_));
  for (const Edge& e : edges_) {
    s[static_cast<Index>(e.i)] += e.w;
    s[static_cast<Index>(e.j)] += e.w;
  }
  return s;
}

Vector WeightedGraph::edge_weights() const {
  Vector w(static_cast<Index>(edges_.size()));
  for (std::size_t a = 0; a < edges_.size(); ++a) w[static_cast<Index>(a)] = edges_[a].w;
  return w;
}

bool is_connected(std::size_t n, std::span<const Edge> edges) {
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Edge& e : edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t u : adj[v]) {
      if (!seen[u]) {
        seen[u] = true;
        ++reached;
        frontier.push(u);
      }
    }
  }
  return reached == n;
}

VertexPartition::VertexPartition(std::vector<std::size_t> assignment)
    : assignment_(std::move(assignment)) {
  if (assignment_.empty()) throw InvalidInput("partition must cover at least one vertex");
  k_ = *std::max_element(assignment_.begin(), assignment_.end()) + 1;
  std::vector<bool> used(k_, false);
  for (std::size_t c : assignment_) used[c] = true;
  for (std::size_t c = 0; c < k_; ++c) {
    if (!used[c]) throw InvalidInput("partition cell " + std::to_string(c) + " is empty");
  }
}

std::vector<std::size_t> VertexPartition::cell_sizes() const {
  std::vector<std::size_t> sizes(k_, 0);
  for (std::size_t c : assignment_) ++sizes[c];
  return sizes;
}

std::vector<std::vector<std::size_t>> VertexPartition::cells() const {
  std::vector<std::vector<std::size_t>> out(k_);
  for (std::size_t v = 0; v < assignment_.size(); ++v) out[assignment_[v]].push_back(v);
  return out;
}

VertexPartition VertexPartition::trivial(std::size_t n) {
  return VertexPartition(std::vector<std::size_t>(n, 0));
}

VertexPartition VertexPartition::discrete(std::size_t n) {
  std::vector<std::size_t> a(n);
  for (std::size_t v = 0; v < n; ++v) a[v] = v;
  return VertexPartition(std::move(a));
}

Matrix adjacency(const WeightedGraph& g) {
  const auto n = static_cast<Index>(g.num_vertices());
  Matrix a = Matrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    a(static_cast<Index>(e.i), static_cast<Index>(e.j)) = e.w;
    a(static_cast<Index>(e.j), static_cast<Index>(e.i)) = e.w;
  }
  return a;
}

Matrix laplacian(const WeightedGraph& g) {
  const auto n = static_cast<Index>(g.num_vertices());
  Matrix l = Matrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    const auto i = static_cast<Index>(e.i);
    const auto j = static_cast<Index>(e.j);
    l(i, j) -= e.w;
    l(j, i) -= e.w;
    l(i, i) += e.w;
    l(j, j) += e.w;
  }
  return l;
}

Matrix incidence(const WeightedGraph& g, std::span<const double> orientation) {
  if (!orientation.empty() && orientation.size() != g.num_edges()) {
    throw InvalidInput("orientation length must equal the edge count");
  }
  Matrix b = Matrix::Zero(static_cast<Index>(g.num_vertices()),
                          static_cast<Index>(g.num_edges()));
  for (std::size_t a = 0; a < g.num_edges(); ++a) {
    const double s = orientation.empty() ? 1.0 : orientation[a];
    if (s != 1.0 && s != -1.0) throw InvalidInput("orientation entries must be +1 or -1");
    const Edge& e = g.edges()[a];
    b(static_cast<Index>(e.i), static_cast<Index>(a)) = s;
    b(static_cast<Index>(e.j), static_cast<Index>(a)) = -s;
  }
  return b;
}

Matrix weight_matrix(const WeightedGraph& g) {
  return g.edge_weights().asDiagonal();
}

Matrix down_edge_laplacian(const WeightedGraph& g) {
  const Matrix b = incidence(g);
  return (b.transpose() * b) * g.edge_weights().asDiagonal();
}

Matrix indicator_matrix(const VertexPartition& p) {
  Matrix m = Matrix::Zero(static_cast<Index>(p.num_vertices()),
                          static_cast<Index>(p.num_cells()));
  for (std::size_t v = 0; v < p.num_vertices(); ++v) {
    m(static_cast<Index>(v), static_cast<Index>(p.cell_of(v))) = 1.0;
  }
  return m;
}

Matrix quotient_matrix(const Matrix& m, const VertexPartition& p) {
  if (m.rows() != m.cols() || m.rows() != static_cast<Index>(p.num_vertices())) {
    throw InvalidInput("quotient_matrix: matrix must be n x n for the partition's n");
  }
  // Block sums of M, then divide each row by its cell size.
  const auto k = static_cast<Index>(p.num_cells());
  Matrix mp = Matrix::Zero(m.rows(), k);
  for (Index v = 0; v < m.cols(); ++v) {
    mp.col(static_cast<Index>(p.cell_of(static_cast<std::size_t>(v)))) += m.col(v);
  }
  Matrix q = Matrix::Zero(k, k);
  for (Index v = 0; v < m.rows(); ++v) {
    q.row(static_cast<Index>(p.cell_of(static_cast<std::size_t>(v)))) += mp.row(v);
  }
  const auto sizes = p.cell_sizes();
  for (Index c = 0; c < k; ++c) q.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
  return q;
}

}  // namespace specsync
