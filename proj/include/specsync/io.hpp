#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "specsync/analysis.hpp"
#include "specsync/dynamics.hpp"
#include "specsync/generators.hpp"
#include "specsync/graph.hpp"
#include "specsync/partition_analysis.hpp"
#include "specsync/spectral.hpp"

namespace specsync {

using Json = nlohmann::json;

// Graph: {"n": int, "edges": [[i, j, w], ...]} with i < j.
Json graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const Json& j);
// Partition: {"assignment": [c_0, ..., c_{n-1}]}.
Json partition_to_json(const VertexPartition& p);
VertexPartition partition_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);  // array of rows
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

// {"eigenvalues": [...], "rows": n, "cols": n, "vectors": row-major}
Json basis_to_json(const SpectralBasis& basis);

Json to_json(const AepReport& r);
Json to_json(const EquitableErrorReport& r);
Json to_json(const ApproximationBoundReport& r);
Json to_json(const LinearPrediction& p);
Json to_json(const DiscriminantEntry& d);

PlantedAepConfig planted_config_from_json(const Json& j);
NestedAepConfig nested_config_from_json(const Json& j);
SbmConfig sbm_config_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

// Number formatted with 17 significant digits (exact round trip).
std::string format_double(double x);

// CSV with header `t,<prefix>_0,...`; one row per sample.
void write_series_csv(const std::filesystem::path& path, const SampledSeries& series,
                      const std::string& prefix);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

// Rebuilds a uniformly sampled series from a CSV written above; t0 and dt
// come from the first two time stamps.
SampledSeries read_series_csv(const std::filesystem::path& path);

// Columns t_start,t_end,active where active lists mode indices separated by
// spaces.
void write_regimes_csv(const std::filesystem::path& path, const RegimeSegmentation& seg);
std::vector<Regime> read_regimes_csv(const std::filesystem::path& path);

}  // namespace specsync
