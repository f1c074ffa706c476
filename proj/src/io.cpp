#include "specsync/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace specsync {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw InvalidInput("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

Json graph_to_json(const WeightedGraph& g) {
  Json edges = Json::array();
  for (const auto& e : g.edges()) edges.push_back(Json::array({e.i, e.j, e.w}));
  return Json{{"n", g.num_vertices()}, {"edges", edges}};
}

WeightedGraph graph_from_json(const Json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw InvalidInput("graph edge must be [i, j, w]");
      edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
    }
    return WeightedGraph(n, std::move(edges));
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("malformed graph JSON: ") + ex.what());
  }
}

Json partition_to_json(const VertexPartition& p) { return Json{{"assignment", p.assignment()}}; }

VertexPartition partition_from_json(const Json& j) {
  try {
    return VertexPartition(j.at("assignment").get<std::vector<std::size_t>>());
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("malformed partition JSON: ") + ex.what());
  }
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("matrix must be an array of rows");
  const auto r = static_cast<Index>(j.size());
  const auto c = r > 0 ? static_cast<Index>(j[0].size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) throw InvalidInput("matrix rows differ in length");
    for (Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("expected a JSON array of numbers");
  try {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("expected numbers: ") + ex.what());
  }
}

Json basis_to_json(const SpectralBasis& basis) {
  std::vector<double> flat;
  const Matrix& v = basis.vertex_vectors;
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index c = 0; c < v.cols(); ++c) flat.push_back(v(i, c));
  }
  return Json{{"eigenvalues", vector_to_json(basis.eigenvalues)},
              {"rows", v.rows()},
              {"cols", v.cols()},
              {"vectors", flat}};
}

Json to_json(const AepReport& r) {
  return Json{{"is_aep", r.is_aep},
              {"max_deviation", r.max_deviation},
              {"combinatorial_is_aep", r.combinatorial_is_aep},
              {"combinatorial_max_deviation", r.combinatorial_max_deviation},
              {"per_vertex_deviations", matrix_to_json(r.per_vertex_deviations)}};
}

Json to_json(const EquitableErrorReport& r) {
  Json modes = Json::array();
  for (const auto& m : r.per_mode) {
    modes.push_back({{"eigenvalue", m.eigenvalue},
                     {"eigenvector", vector_to_json(m.eigenvector)},
                     {"epsilon_norm", m.epsilon_norm},
                     {"bound_sigma", m.bound_sigma},
                     {"bound_rowsum", m.bound_rowsum}});
  }
  return Json{{"sigma1", r.sigma1},
              {"max_row_sum", r.max_row_sum},
              {"rowsum_bound_holds", r.rowsum_bound_holds},
              {"e", matrix_to_json(r.e)},
              {"modes", modes}};
}

Json to_json(const ApproximationBoundReport& r) {
  return Json{{"eigenvalue", r.eigenvalue}, {"gamma", r.gamma},       {"retained", r.retained},
              {"actual_error", r.actual_error}, {"delta", r.delta}, {"bound", r.bound}};
}

Json to_json(const LinearPrediction& p) {
  Json modes = Json::array();
  for (const auto& m : p.modes) {
    modes.push_back({{"mode", m.mode},
                     {"eigenvalue", m.eigenvalue},
                     {"omega_r", m.omega_r},
                     {"lag_term", m.lag_term},
                     {"alpha_inf", m.alpha_inf},
                     {"decay_rate", m.decay_rate}});
  }
  return modes;
}

Json to_json(const DiscriminantEntry& d) {
  return Json{{"mode", d.mode},
              {"eigenvalue", d.eigenvalue},
              {"omega_r", d.omega_r},
              {"x", d.x},
              {"delta", d.delta},
              {"regime", d.regime == ModeRegime::limit_cycle ? "limit_cycle" : "fixed_point"}};
}

PlantedAepConfig planted_config_from_json(const Json& j) {
  try {
    PlantedAepConfig c;
    c.cell_sizes = j.at("cell_sizes").get<std::vector<std::size_t>>();
    c.quotient_weights = matrix_from_json(j.at("quotient_weights"));
    c.intra_density = get_or(j, "intra_density", c.intra_density);
    if (j.contains("intra_weight_range")) {
      const auto r = j.at("intra_weight_range").get<std::vector<double>>();
      if (r.size() != 2) throw InvalidInput("intra_weight_range must have two entries");
      c.intra_weight_range = {r[0], r[1]};
    }
    c.cross_density = get_or(j, "cross_density", c.cross_density);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    return c;
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("malformed planted-aep config: ") + ex.what());
  }
}

NestedAepConfig nested_config_from_json(const Json& j) {
  try {
    NestedAepConfig c;
    c.branching = j.at("branching").get<std::vector<std::size_t>>();
    c.leaf_size = j.at("leaf_size").get<std::size_t>();
    c.level_weights = j.at("level_weights").get<std::vector<double>>();
    c.intra_density = get_or(j, "intra_density", c.intra_density);
    if (j.contains("intra_weight_range")) {
      const auto r = j.at("intra_weight_range").get<std::vector<double>>();
      if (r.size() != 2) throw InvalidInput("intra_weight_range must have two entries");
      c.intra_weight_range = {r[0], r[1]};
    }
    c.cross_density = get_or(j, "cross_density", c.cross_density);
    c.jitter = get_or(j, "jitter", c.jitter);
    c.max_attempts = get_or(j, "max_attempts", c.max_attempts);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    return c;
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("malformed nested-aep config: ") + ex.what());
  }
}

SbmConfig sbm_config_from_json(const Json& j) {
  try {
    SbmConfig c;
    c.block_sizes = j.at("block_sizes").get<std::vector<std::size_t>>();
    c.probabilities = matrix_from_json(j.at("probabilities"));
    c.max_attempts = get_or(j, "max_attempts", c.max_attempts);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    return c;
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("malformed sbm config: ") + ex.what());
  }
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw InvalidInput(path.string() + ": " + ex.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_series_csv(const std::filesystem::path& path, const SampledSeries& series,
                      const std::string& prefix) {
  auto out = open_out(path);
  out << 't';
  for (Index r = 0; r < series.values.rows(); ++r) out << ',' << prefix << '_' << r;
  out << '\n';
  for (Index k = 0; k < series.values.cols(); ++k) {
    out << format_double(series.time(static_cast<std::size_t>(k)));
    for (Index r = 0; r < series.values.rows(); ++r) out << ',' << format_double(series.values(r, k));
    out << '\n';
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": empty CSV");
  table.header = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size()) throw InvalidInput(path.string() + ": ragged CSV row");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    table.rows.push_back(std::move(row));
  }
  return table;
}

SampledSeries read_series_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "t") throw InvalidInput(path.string() + ": first column must be t");
  SampledSeries s;
  const auto rows = static_cast<Index>(table.header.size() - 1);
  s.values.resize(rows, static_cast<Index>(table.rows.size()));
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    for (Index r = 0; r < rows; ++r) s.values(r, static_cast<Index>(k)) = table.rows[k][static_cast<std::size_t>(r) + 1];
  }
  if (!table.rows.empty()) s.t0 = table.rows[0][0];
  if (table.rows.size() > 1) s.dt = table.rows[1][0] - table.rows[0][0];
  return s;
}

void write_regimes_csv(const std::filesystem::path& path, const RegimeSegmentation& seg) {
  auto out = open_out(path);
  out << "t_start,t_end,active\n";
  for (const auto& r : seg.regimes) {
    out << format_double(r.t_start) << ',' << format_double(r.t_end) << ',';
    for (std::size_t i = 0; i < r.active.size(); ++i) out << (i ? " " : "") << r.active[i];
    out << '\n';
  }
}

std::vector<Regime> read_regimes_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "t_start,t_end,active") {
    throw InvalidInput(path.string() + ": unexpected regime CSV header");
  }
  std::vector<Regime> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw InvalidInput(path.string() + ": malformed regime row");
    Regime r;
    r.t_start = parse_double(cells[0]);
    r.t_end = parse_double(cells[1]);
    std::istringstream modes(cells[2]);
    std::size_t m;
    while (modes >> m) r.active.push_back(m);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace specsync
