#include "doctest.h"
#include "specsync/spectral.hpp"
#include "test_util.hpp"

using namespace specsync;
using specsync::testing::random_graph;

TEST_CASE("closed-form spectra") {
  auto two = SpectralBasis::from_graph(WeightedGraph(2, {{0, 1, 2.0}}));
  CHECK(two.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(two.eigenvalues(1) == doctest::Approx(4.0));
  CHECK(std::abs(two.vertex_vectors(0, 1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(two.vertex_vectors(0, 1) == doctest::Approx(-two.vertex_vectors(1, 1)));

  auto p = SpectralBasis::from_graph(testing::path3());
  CHECK(p.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(p.eigenvalues(2) == doctest::Approx(3.0));

  auto k = SpectralBasis::from_graph(testing::k23());
  double expect[] = {0, 2, 2, 3, 5};
  for (int i = 0; i < 5; ++i) CHECK(k.eigenvalues(i) == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("jacobi agrees with Eigen on random symmetric matrices") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    specsync::Rng rng(seed);
    std::size_t n = 1 + rng.below(25);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.uniform(-1, 1);
    auto mine = eigendecompose(a);
    Eigen::SelfAdjointEigenSolver<Matrix> oracle(a);
    CHECK((mine.values - oracle.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((mine.vectors.transpose() * mine.vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a * mine.vectors - mine.vectors * mine.values.asDiagonal()).cwiseAbs().maxCoeff() < 1e-9);
  }
  Matrix ns(2, 2);
  ns << 1, 2, 0, 1;
  CHECK_THROWS_AS(eigendecompose(ns), InvalidInput);
}

TEST_CASE("general eigensolver on quotient-like matrices") {
  Matrix a(2, 2);
  a << 1, -1, -2, 2;
  auto r = eigendecompose_general(a);
  CHECK(r.values(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.values(1) == doctest::Approx(3.0));
  CHECK(r.vectors(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(r.vectors(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));

  Matrix b(2, 2);
  b << 3, -3, -2, 2;
  auto rb = eigendecompose_general(b);
  CHECK(rb.values(1) == doctest::Approx(5.0));
  CHECK(rb.values.sum() == doctest::Approx(b.trace()));

  auto id = eigendecompose_general(Matrix::Identity(4, 4));
  CHECK((id.values - Vector::Ones(4)).norm() < 1e-12);

  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK_THROWS_AS(eigendecompose_general(rot), InvalidInput);
}

TEST_CASE("basis invariants on random graphs") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::size_t n = 2 + seed % 12;
    auto g = random_graph(n, 0.4, seed);
    auto basis = SpectralBasis::from_graph(g);
    Matrix l = laplacian(g);
    const Matrix& v = basis.vertex_vectors;
    CHECK(std::abs(basis.eigenvalues(0)) < 1e-10);
    CHECK((v.col(0).cwiseAbs() - Vector::Constant(n, 1.0 / std::sqrt(double(n)))).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((v.transpose() * v - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((l * v - v * basis.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() < 1e-8);
    for (Index i = 1; i < basis.eigenvalues.size(); ++i) CHECK(basis.eigenvalues(i) >= basis.eigenvalues(i - 1));

    // edge vectors: down-edge eigenpairs and W-orthogonality
    Matrix ldn = down_edge_laplacian(g);
    const Matrix& e = basis.edge_vectors;
    CHECK((ldn * e - e * basis.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() < 1e-8);
    Matrix pairing = e.transpose() * basis.edge_weights.asDiagonal() * e;
    CHECK((pairing - Matrix(basis.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("sign convention is reproducible") {
  auto g = random_graph(9, 0.5, 4);
  auto a = SpectralBasis::from_graph(g);
  auto b = SpectralBasis::from_graph(g);
  CHECK(a.vertex_vectors == b.vertex_vectors);
  for (Index r = 0; r < a.vertex_vectors.cols(); ++r) {
    for (Index i = 0; i < a.vertex_vectors.rows(); ++i) {
      if (std::abs(a.vertex_vectors(i, r)) > 1e-8) {
        CHECK(a.vertex_vectors(i, r) > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("decompose and reconstruct") {
  auto g = random_graph(10, 0.4, 21);
  auto basis = SpectralBasis::from_graph(g);
  Vector c = Vector::Constant(10, 0.7);
  Vector a = decompose(c, basis);
  CHECK(std::abs(a(0)) == doctest::Approx(0.7 * std::sqrt(10.0)));
  CHECK(a.tail(9).cwiseAbs().maxCoeff() < 1e-10);

  Vector v1 = basis.vertex_vectors.col(1);
  Vector a1 = decompose(v1, basis);
  CHECK(a1(1) == doctest::Approx(1.0));
  CHECK(a1.cwiseAbs().sum() == doctest::Approx(1.0));

  specsync::Rng rng(5);
  Vector theta(10);
  for (Index i = 0; i < 10; ++i) theta(i) = rng.uniform(-3, 3);
  Vector at = decompose(theta, basis);
  CHECK(at.squaredNorm() == doctest::Approx(theta.squaredNorm()).epsilon(1e-12));
  CHECK((reconstruct(at, basis) - theta).norm() < 1e-12);
}

TEST_CASE("structural indices") {
  auto p = SpectralBasis::from_graph(testing::path3());
  CHECK(structural_indices(p, VertexPartition({0, 1, 0})) == std::vector<std::size_t>{0, 2});
  CHECK(structural_indices(p, VertexPartition::trivial(3)) == std::vector<std::size_t>{0});
  CHECK(structural_indices(p, VertexPartition::discrete(3)) == std::vector<std::size_t>{0, 1, 2});

  // K_{2,3}: eigenvalue 2 is twofold; neither eigenvector is cell-constant
  // on the bipartition but the quotient contributes {0, 5}.
  auto k = SpectralBasis::from_graph(testing::k23());
  CHECK(structural_indices(k, VertexPartition({0, 0, 1, 1, 1})) == std::vector<std::size_t>{0, 4});

  // 4-cycle with opposite vertices paired: eigenvalue 2 is doubled and only
  // one direction in its eigenspace is cell-constant.
  auto c4 = SpectralBasis::from_graph(testing::cycle(4));
  auto idx = structural_indices(c4, VertexPartition({0, 1, 0, 1}));
  CHECK(idx.size() == 2);
  CHECK(idx[0] == 0);
  CHECK(c4.eigenvalues(static_cast<Index>(idx[1])) == doctest::Approx(4.0));
  auto idx2 = structural_indices(c4, VertexPartition({0, 0, 1, 1}));
  CHECK(idx2.size() == 2);
  CHECK(c4.eigenvalues(static_cast<Index>(idx2[1])) == doctest::Approx(2.0));
}

TEST_CASE("degenerate blocks") {
  Vector ev(5);
  ev << 0, 2, 2 + 1e-12, 3, 5;
  auto blocks = degenerate_blocks(ev);
  REQUIRE(blocks.size() == 4);
  CHECK(blocks[1] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("orientation flip leaves the vertex basis and pairing intact") {
  auto g = random_graph(8, 0.5, 9);
  std::vector<double> o(g.num_edges(), 1.0);
  o[0] = -1.0;
  o[g.num_edges() - 1] = -1.0;
  auto a = SpectralBasis::from_graph(g);
  auto b = SpectralBasis::from_graph(g, o);
  CHECK((a.vertex_vectors - b.vertex_vectors).norm() < 1e-14);
  CHECK(b.edge_vectors(0, 2) == doctest::Approx(-a.edge_vectors(0, 2)));
  Matrix pb = b.edge_vectors.transpose() * b.edge_weights.asDiagonal() * b.edge_vectors;
  CHECK((pb - Matrix(b.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() < 1e-8);
}
