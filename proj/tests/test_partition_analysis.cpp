#include "doctest.h"
#include "specsync/generators.hpp"
#include "specsync/partition_analysis.hpp"
#include "test_util.hpp"

using namespace specsync;
using specsync::testing::random_graph;
using specsync::testing::random_partition;

namespace {

PlantedGraph small_planted(std::uint64_t seed) {
  PlantedAepConfig cfg;
  cfg.cell_sizes = {5, 5, 5};
  cfg.quotient_weights = Matrix(3, 3);
  cfg.quotient_weights << 0, 0.6, 0.3, 0.6, 0, 0.45, 0.3, 0.45, 0;
  cfg.intra_density = 0.6;
  cfg.intra_weight_range = {1.0, 2.0};
  cfg.seed = seed;
  return planted_aep(cfg);
}

// Per-vertex out-weight deviations computed straight from the edge list.
double brute_force_deviation(const WeightedGraph& g, const VertexPartition& p) {
  const std::size_t n = g.num_vertices(), k = p.num_cells();
  std::vector<std::vector<double>> out(n, std::vector<double>(k, 0.0));
  for (auto& e : g.edges()) {
    out[e.i][p.cell_of(e.j)] += e.w;
    out[e.j][p.cell_of(e.i)] += e.w;
  }
  double worst = 0.0;
  for (auto& cell : p.cells())
    for (std::size_t q = 0; q < k; ++q) {
      if (q == p.cell_of(cell[0])) continue;
      for (auto a : cell)
        for (auto b : cell) worst = std::max(worst, std::abs(out[a][q] - out[b][q]));
    }
  return worst;
}

}  // namespace

TEST_CASE("check_aep on hand examples") {
  auto r = check_aep(testing::path3(), VertexPartition({0, 1, 0}));
  CHECK(r.is_aep);
  CHECK(r.combinatorial_is_aep);
  CHECK(r.max_deviation == 0.0);

  auto bad = check_aep(testing::path3(), VertexPartition({0, 1, 1}));
  CHECK_FALSE(bad.is_aep);
  CHECK_FALSE(bad.combinatorial_is_aep);
  CHECK(bad.max_deviation == doctest::Approx(0.5));

  CHECK(check_aep(testing::k23(), VertexPartition({0, 0, 1, 1, 1})).is_aep);
  CHECK_THROWS_AS(check_aep(testing::path3(), VertexPartition({0, 1})), InvalidInput);
}

TEST_CASE("equitable error of the path with an unbalanced split") {
  auto rep = equitable_error(testing::path3(), VertexPartition({0, 1, 1}));
  Matrix expect(3, 2);
  expect << 0, 0, 0.5, -0.5, -0.5, 0.5;
  CHECK((rep.e - expect).norm() < 1e-14);
  CHECK(rep.sigma1 == doctest::Approx(1.0));
  CHECK(qep_score(testing::path3(), VertexPartition({0, 1, 1})) == doctest::Approx(0.75));

  auto exact = equitable_error(testing::path3(), VertexPartition({0, 1, 0}));
  CHECK(exact.e.norm() == 0.0);
  for (auto& m : exact.per_mode) CHECK(m.epsilon_norm == 0.0);
  CHECK(qep_score(testing::path3(), VertexPartition({0, 1, 0})) == 0.0);
}

TEST_CASE("AEP checks agree with the commutation test and a brute-force oracle") {
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto g = random_graph(10, 0.4, seed);
    auto p = random_partition(10, 3, seed + 500);
    auto r = check_aep(g, p);
    CHECK(r.is_aep == r.combinatorial_is_aep);
    CHECK((brute_force_deviation(g, p) <= 1e-9) == r.combinatorial_is_aep);
    // out-weight deviation from the mean is at most the spread between members
    CHECK(r.combinatorial_max_deviation <= brute_force_deviation(g, p) + 1e-12);
    if (!r.is_aep) ++rejected;
  }
  CHECK(rejected == 100);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto pg = small_planted(seed);
    auto r = check_aep(pg.graph, pg.partition);
    CHECK(r.is_aep);
    CHECK(r.combinatorial_is_aep);
    Matrix l = laplacian(pg.graph);
    Matrix ind = indicator_matrix(pg.partition);
    CHECK((l * ind - ind * quotient_matrix(l, pg.partition)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("lifted quotient eigenpairs on an exact AEP") {
  auto pg = small_planted(3);
  Matrix l = laplacian(pg.graph);
  Matrix ind = indicator_matrix(pg.partition);
  for (auto& m : quotient_modes(pg.graph, pg.partition)) {
    Vector pv = ind * m.vector;
    CHECK((l * pv - m.eigenvalue * pv).norm() <= 1e-8 * pv.norm());
  }
}

TEST_CASE("bound chain and sigma_1 oracle") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto g = random_graph(9, 0.5, seed);
    auto p = random_partition(9, 3, seed + 99);
    auto rep = equitable_error(g, p);
    Eigen::JacobiSVD<Matrix> svd(rep.e);
    CHECK(rep.sigma1 == doctest::Approx(svd.singularValues()(0)).epsilon(1e-10));
    CHECK(rep.rowsum_bound_holds);
    for (auto& m : rep.per_mode) {
      CHECK(m.epsilon_norm <= m.bound_sigma * (1 + 1e-12) + 1e-14);
      CHECK(m.bound_sigma <= m.bound_rowsum * (1 + 1e-12) + 1e-14);
    }
  }
}

TEST_CASE("noise enters E only through its own equitable error") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto pg = small_planted(seed);
    auto noisy = perturb(pg.graph, pg.partition, 0.1, seed + 1);
    Matrix l = laplacian(pg.graph);
    Matrix n = laplacian(noisy) - l;
    Matrix ind = indicator_matrix(pg.partition);
    Matrix expect = ind * quotient_matrix(n, pg.partition) - n * ind;
    CHECK((equitable_error_matrix(laplacian(noisy), pg.partition) - expect).cwiseAbs().maxCoeff() < 1e-10);

    // the coordinate change to the eigenbasis preserves the error norm
    auto basis = SpectralBasis::from_graph(noisy);
    Vector eps = equitable_error_matrix(laplacian(noisy), pg.partition) * Vector::Ones(3);
    Vector beta = basis.vertex_vectors.transpose() * eps;
    CHECK(beta.norm() == doctest::Approx(eps.norm()).epsilon(1e-12));
  }
}

TEST_CASE("error shrinks with perturbation size") {
  auto pg = small_planted(8);
  double prev = -1.0;
  double prev_score = -1.0;
  for (int i = 0; i < 10; ++i) {
    double eta = 0.01 * (i + 1);
    auto g = perturb(pg.graph, pg.partition, eta, 42);
    auto rep = equitable_error(g, pg.partition);
    double emax = rep.e.cwiseAbs().maxCoeff();
    double score = qep_score(g, pg.partition);
    CHECK(emax > prev);
    CHECK(score > prev_score);
    prev = emax;
    prev_score = score;
  }
}

TEST_CASE("approximation bound") {
  auto pg = small_planted(2);
  auto basis = SpectralBasis::from_graph(pg.graph);
  for (auto& m : quotient_modes(pg.graph, pg.partition)) {
    auto r = approximation_bound(pg.graph, pg.partition, basis, m, 0.05);
    CHECK(r.delta < 1e-10);
    CHECK(r.actual_error < 1e-8);
    auto all = approximation_bound(pg.graph, pg.partition, basis, m, 1e6);
    CHECK(all.retained.size() == basis.size());
    CHECK(all.actual_error < 1e-12);
    CHECK(all.bound == 0.0);
  }

  auto g = perturb(pg.graph, pg.partition, 0.05, 7);
  auto nb = SpectralBasis::from_graph(g);
  for (auto& m : quotient_modes(g, pg.partition)) {
    // half the gap to the nearest graph eigenvalue outside the closest one
    std::vector<double> d;
    for (Index i = 0; i < nb.eigenvalues.size(); ++i) d.push_back(std::abs(nb.eigenvalues(i) - m.eigenvalue));
    std::sort(d.begin(), d.end());
    double gamma = 0.5 * (d[0] + d[1]);
    auto r = approximation_bound(g, pg.partition, nb, m, gamma);
    CHECK(r.actual_error <= r.bound + 1e-12);
  }
  CHECK_THROWS_AS(approximation_bound(pg.graph, pg.partition, basis, quotient_modes(pg.graph, pg.partition)[0], 0.0),
                  InvalidInput);
}
