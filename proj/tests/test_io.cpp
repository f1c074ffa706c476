#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "specsync/io.hpp"
#include "test_util.hpp"

using namespace specsync;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "specsync_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("graph JSON layout and round trip") {
  WeightedGraph g(3, {{0, 1, 0.5}, {1, 2, 2.0}});
  Json j = graph_to_json(g);
  CHECK(j["n"] == 3);
  CHECK(j["edges"] == Json::parse("[[0,1,0.5],[1,2,2.0]]"));

  auto r = specsync::testing::random_graph(12, 0.4, 3);
  CHECK(graph_from_json(Json::parse(graph_to_json(r).dump())) == r);

  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"edges": []})")), InvalidInput);
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"n": 2, "edges": [[0, 1]]})")), InvalidInput);
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"n": 2, "edges": [[0, 1, -1]]})")), InvalidInput);
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"n": 3, "edges": [[0, 1, 1]]})")), InvalidInput);
}

TEST_CASE("partition JSON") {
  VertexPartition p({0, 1, 1, 0});
  Json j = partition_to_json(p);
  CHECK(j == Json::parse(R"({"assignment": [0, 1, 1, 0]})"));
  CHECK(partition_from_json(j) == p);
  CHECK_THROWS_AS(partition_from_json(Json::parse(R"({"assignment": [0, 2]})")), InvalidInput);
  CHECK_THROWS_AS(partition_from_json(Json::parse(R"({"cells": [0]})")), InvalidInput);
}

TEST_CASE("matrix and vector JSON") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6.25;
  CHECK(matrix_to_json(m) == Json::parse("[[1,2,3],[4,5,6.25]]"));
  CHECK(matrix_from_json(matrix_to_json(m)) == m);
  CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,2],[3]]")), InvalidInput);
  Vector v(3);
  v << 0.1, -2, 1e-300;
  CHECK(vector_from_json(Json::parse(vector_to_json(v).dump())) == v);
  CHECK_THROWS_AS(vector_from_json(Json::parse(R"(["a"])")), InvalidInput);
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("series CSV round trip") {
  SampledSeries s;
  s.t0 = 1.0;
  s.dt = 0.1;
  s.values = Matrix(3, 4);
  specsync::Rng rng(1);
  for (Index i = 0; i < 3; ++i)
    for (Index k = 0; k < 4; ++k) s.values(i, k) = rng.uniform(-5, 5);
  auto path = scratch("series.csv");
  write_series_csv(path, s, "alpha");
  auto table = read_csv(path);
  CHECK(table.header == std::vector<std::string>{"t", "alpha_0", "alpha_1", "alpha_2"});
  CHECK(table.rows.size() == 4);
  auto back = read_series_csv(path);
  CHECK(back.values == s.values);
  CHECK(back.t0 == doctest::Approx(1.0));
  CHECK(back.dt == doctest::Approx(0.1));

  std::ofstream(scratch("ragged.csv")) << "t,a\n0,1\n1\n";
  CHECK_THROWS_AS(read_csv(scratch("ragged.csv")), InvalidInput);
  CHECK_THROWS_AS(read_csv(scratch("missing.csv")), InvalidInput);
}

TEST_CASE("regime CSV round trip") {
  RegimeSegmentation seg;
  seg.regimes = {{0.0, 2.5, {1, 2, 5}}, {2.5, 9.0, {3}}, {9.0, 20.0, {}}};
  auto path = scratch("regimes.csv");
  write_regimes_csv(path, seg);
  auto text = slurp(path);
  CHECK(text.rfind("t_start,t_end,active\n", 0) == 0);
  auto back = read_regimes_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].t_start == seg.regimes[i].t_start);
    CHECK(back[i].t_end == seg.regimes[i].t_end);
    CHECK(back[i].active == seg.regimes[i].active);
  }
}

TEST_CASE("config readers") {
  auto planted = planted_config_from_json(Json::parse(R"({
    "cell_sizes": [2, 3], "quotient_weights": [[0, 3], [2, 0]],
    "intra_weight_range": [1, 2], "seed": 9})"));
  CHECK(planted.cell_sizes == std::vector<std::size_t>{2, 3});
  CHECK(planted.quotient_weights(1, 0) == 2.0);
  CHECK(planted.intra_weight_range.second == 2.0);
  CHECK(planted.intra_density == 0.5);
  CHECK(planted.seed == 9);
  CHECK_THROWS_AS(planted_config_from_json(Json::parse(R"({"cell_sizes": [2]})")), InvalidInput);
  CHECK_THROWS_AS(planted_config_from_json(Json::parse(
                      R"({"cell_sizes": [2], "quotient_weights": [[0]], "intra_weight_range": [1]})")),
                  InvalidInput);

  auto nested = nested_config_from_json(Json::parse(R"({
    "branching": [3, 2], "leaf_size": 30, "level_weights": [0.01, 0.1], "jitter": 0.05})"));
  CHECK(nested.branching == std::vector<std::size_t>{3, 2});
  CHECK(nested.jitter == 0.05);
  CHECK(nested.max_attempts == 8);

  auto sbm = sbm_config_from_json(Json::parse(R"({"block_sizes": [4, 4], "probabilities": [[1, 0.5], [0.5, 1]]})"));
  CHECK(sbm.block_sizes.size() == 2);
  CHECK(sbm.probabilities(0, 1) == 0.5);
  CHECK(sbm.max_attempts == 100);
}

TEST_CASE("JSON files") {
  auto dir = scratch("nested") / "deeper";
  std::filesystem::remove_all(dir);
  auto path = dir / "x.json";
  write_json(path, Json{{"a", 1}});
  CHECK(read_json(path)["a"] == 1);
  auto text = slurp(path);
  CHECK(text.back() == '\n');
  std::ofstream(scratch("broken.json")) << "{ nope";
  CHECK_THROWS_AS(read_json(scratch("broken.json")), InvalidInput);
  CHECK_THROWS_AS(read_json(scratch("absent.json")), InvalidInput);
}

TEST_CASE("report serialisation") {
  auto g = specsync::testing::path3();
  VertexPartition p({0, 1, 1});
  Json aep = to_json(check_aep(g, p));
  CHECK(aep["is_aep"] == false);
  CHECK(aep["max_deviation"].get<double>() == doctest::Approx(0.5));
  Json err = to_json(equitable_error(g, p));
  CHECK(err["sigma1"].get<double>() == doctest::Approx(1.0));
  auto basis = SpectralBasis::from_graph(g);
  Json b = basis_to_json(basis);
  CHECK(b["eigenvalues"].size() == 3);
  CHECK(b["vectors"].size() == 9);
}
