// Command-line front end: generate graphs, analyze partitions, simulate and
// predict oscillator dynamics, run the scripted scenarios.
//
// Exit codes: 0 success, 1 failed check or numerical failure, 2 usage or
// configuration error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "specsync/analysis.hpp"
#include "specsync/dynamics.hpp"
#include "specsync/experiments.hpp"
#include "specsync/generators.hpp"
#include "specsync/io.hpp"
#include "specsync/partition_analysis.hpp"
#include "specsync/spectral.hpp"

namespace fs = std::filesystem;
using namespace specsync;

namespace {

struct Global {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "json";
};

// A value given either inline as a JSON array or as the path of a JSON file.
Vector load_vector(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t");
  if (first != std::string::npos && arg[first] == '[') {
    try {
      return vector_from_json(Json::parse(arg));
    } catch (const Json::parse_error& e) {
      throw InvalidInput(std::string("bad inline array: ") + e.what());
    }
  }
  return vector_from_json(read_json(arg));
}

void flatten(const Json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_number_float()) {
    out << prefix << ',' << format_double(j.get<double>()) << '\n';
  } else {
    out << prefix << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

fs::path write_report(const Global& g, const std::string& stem, const Json& report) {
  const fs::path dir(g.out_dir);
  if (g.format == "csv") {
    fs::create_directories(dir);
    const fs::path path = dir / (stem + ".csv");
    std::ofstream out(path);
    out << "key,value\n";
    flatten(report, "", out);
    return path;
  }
  const fs::path path = dir / (stem + ".json");
  write_json(path, report);
  return path;
}

int cmd_generate(const Global& g, const std::string& kind, const std::string& config_path) {
  Json cfg = read_json(config_path);
  const fs::path dir(g.out_dir);
  if (kind == "planted-aep") {
    PlantedAepConfig c = planted_config_from_json(cfg);
    if (g.seed) c.seed = *g.seed;
    const PlantedGraph pg = planted_aep(c);
    write_json(dir / "graph.json", graph_to_json(pg.graph));
    write_json(dir / "partition.json", partition_to_json(pg.partition));
  } else if (kind == "nested-aep") {
    NestedAepConfig c = nested_config_from_json(cfg);
    if (g.seed) c.seed = *g.seed;
    const NestedGraph ng = nested_aep(c);
    write_json(dir / "graph.json", graph_to_json(ng.graph));
    write_json(dir / "partition.json", partition_to_json(ng.partitions.back()));
    for (std::size_t l = 0; l < ng.partitions.size(); ++l) {
      write_json(dir / ("partition_level" + std::to_string(l) + ".json"), partition_to_json(ng.partitions[l]));
    }
  } else {
    SbmConfig c = sbm_config_from_json(cfg);
    if (g.seed) c.seed = *g.seed;
    const PlantedGraph pg = sample_sbm(c);
    write_json(dir / "graph.json", graph_to_json(pg.graph));
    write_json(dir / "partition.json", partition_to_json(pg.partition));
  }
  std::cout << "wrote " << (dir / "graph.json").string() << " and " << (dir / "partition.json").string() << '\n';
  return 0;
}

int cmd_analyze(const Global& g, const std::string& graph_path, const std::string& partition_path,
                std::optional<double> gamma) {
  const WeightedGraph graph = graph_from_json(read_json(graph_path));
  const VertexPartition part = partition_from_json(read_json(partition_path));
  if (part.num_vertices() != graph.num_vertices()) throw InvalidInput("partition size does not match the graph");
  const AepReport aep = check_aep(graph, part);
  const EquitableErrorReport err = equitable_error(graph, part);
  const double score = qep_score(graph, part);
  Json report{{"aep", to_json(aep)}, {"equitable_error", to_json(err)}, {"qep_score", score}};
  Json modes = Json::array();
  const auto qmodes = quotient_modes(graph, part);
  for (const auto& m : qmodes) modes.push_back({{"eigenvalue", m.eigenvalue}, {"vector", vector_to_json(m.vector)}});
  report["quotient_modes"] = modes;
  if (gamma) {
    const SpectralBasis basis = SpectralBasis::from_graph(graph);
    Json bounds = Json::array();
    for (const auto& m : qmodes) bounds.push_back(to_json(approximation_bound(graph, part, basis, m, *gamma)));
    report["approximation_bounds"] = bounds;
  }
  const fs::path path = write_report(g, "report", report);
  std::cout << "is_aep=" << (aep.is_aep ? "true" : "false") << " max_deviation=" << aep.max_deviation
            << " sigma1=" << err.sigma1 << " qep_score=" << score << '\n'
            << "wrote " << path.string() << '\n';
  return 0;
}

struct SimulateArgs {
  std::string graph, omega, beta, theta0, basis = "vertex";
  double sigma = 1.0, dt = 0.01;
  std::size_t steps = 1000, record_every = 1;
  std::optional<double> rezero;
};

int cmd_simulate(const Global& g, const SimulateArgs& a) {
  const WeightedGraph graph = graph_from_json(read_json(a.graph));
  const std::size_t n = graph.num_vertices();
  const Vector omega = load_vector(a.omega);
  const Vector beta = a.beta.empty() ? Vector() : load_vector(a.beta);
  const Vector theta0 = a.theta0.empty() ? Vector::Zero(static_cast<Index>(n)) : load_vector(a.theta0);
  if (static_cast<std::size_t>(theta0.size()) != n) throw InvalidInput("theta0 length must equal the vertex count");
  if (a.steps % a.record_every != 0) throw InvalidInput("--steps must be a multiple of --record-every");
  const OscillatorSystem sys(graph, omega, a.sigma, beta);
  const SpectralBasis basis = SpectralBasis::from_graph(graph);

  Trajectory traj;
  if (a.basis == "coefficient") {
    traj = to_phases(integrate_coefficient(sys, basis, decompose(theta0, basis), a.dt, a.steps, a.record_every), basis);
  } else {
    traj = integrate_vertex(sys, theta0, a.dt, a.steps, a.record_every);
  }
  if (a.rezero) {
    const double k = std::round((*a.rezero - traj.t0) / traj.dt);
    if (!(k >= 0.0) || k > static_cast<double>(traj.steps())) throw InvalidInput("--rezero time outside the run");
    traj = rezero(traj, static_cast<std::size_t>(k));
  }
  const fs::path dir(g.out_dir);
  write_series_csv(dir / "phases.csv", traj, "theta");
  write_series_csv(dir / "coefficients.csv", to_coefficients(traj, basis), "alpha");
  std::cout << "wrote " << (dir / "phases.csv").string() << " and " << (dir / "coefficients.csv").string() << '\n';
  return 0;
}

struct PredictArgs {
  std::string graph, omega, beta;
  double sigma = 1.0;
  std::optional<std::size_t> mode;
  std::optional<double> time;
  double alpha0 = 0.0;
  double margin = 1.0;
};

int cmd_predict(const Global& g, const PredictArgs& a) {
  if (a.mode && *a.mode == 0) throw InvalidInput("--mode must be >= 1 (mode 0 is the drifting mean)");
  const WeightedGraph graph = graph_from_json(read_json(a.graph));
  const OscillatorSystem sys(graph, load_vector(a.omega), a.sigma, a.beta.empty() ? Vector() : load_vector(a.beta));
  const SpectralBasis basis = SpectralBasis::from_graph(graph);
  Json report{{"asymptotics", to_json(asymptotic_coefficients(sys, basis))}};
  Json disc = Json::array();
  if (a.mode) {
    disc.push_back(to_json(discriminant(sys, basis, *a.mode)));
    if (a.time) {
      const SingleModeValue v = single_mode_solution(sys, basis, *a.mode, a.alpha0, *a.time, a.margin);
      report["single_mode"] = {{"mode", *a.mode}, {"t", *a.time}, {"alpha", v.value}, {"valid", v.valid}};
    }
  } else {
    for (const auto& d : discriminant_report(sys, basis)) disc.push_back(to_json(d));
  }
  report["discriminants"] = disc;
  const fs::path path = write_report(g, "prediction", report);
  for (const auto& d : disc) {
    std::cout << "mode " << d["mode"] << " delta=" << d["delta"].get<double>() << ' '
              << d["regime"].get<std::string>() << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_experiment(const Global& g, const std::string& name, const std::string& config_path) {
  const Json cfg = config_path.empty() ? Json::object() : read_json(config_path);
  const ScenarioResult r = run_scenario(name, cfg, g.seed.value_or(0), g.out_dir);
  for (const auto& a : r.assertions) {
    std::cout << (a.passed ? "PASS " : "FAIL ") << r.id << '.' << a.name << ": " << a.detail << '\n';
  }
  std::cout << "results in " << (fs::path(g.out_dir) / r.id).string() << '\n';
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral analysis and simulation of Kuramoto dynamics on graphs with equitable partitions"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "RNG seed; overrides the seed in generator configs");
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--format", g.format, "Report format for analyze/predict")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  std::string gen_kind, gen_config;
  auto* gen = app.add_subcommand("generate", "Generate a graph and partition (graph.json, partition.json)");
  gen->add_option("kind", gen_kind, "planted-aep | nested-aep | sbm")
      ->required()
      ->check(CLI::IsMember({"planted-aep", "nested-aep", "sbm"}));
  gen->add_option("--config", gen_config, "Generator config JSON")->required()->check(CLI::ExistingFile);

  std::string an_graph, an_partition;
  std::optional<double> an_gamma;
  auto* an = app.add_subcommand("analyze", "AEP check, equitable error, bounds and QEP score");
  an->add_option("--graph", an_graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  an->add_option("--partition", an_partition, "Partition JSON")->required()->check(CLI::ExistingFile);
  an->add_option("--gamma", an_gamma, "Spectral window for the eigenvector approximation bound")
      ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Integrate the oscillator network (phases.csv, coefficients.csv)");
  sm->add_option("--graph", sim.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  sm->add_option("--omega", sim.omega, "Natural frequencies: JSON file or inline array")->required();
  sm->add_option("--sigma", sim.sigma, "Coupling strength")->check(CLI::NonNegativeNumber)->capture_default_str();
  sm->add_option("--beta", sim.beta, "Per-edge phase lags: JSON file or inline array");
  sm->add_option("--theta0", sim.theta0, "Initial phases (default zeros): JSON file or inline array");
  sm->add_option("--dt", sim.dt, "Step size")->check(CLI::PositiveNumber)->capture_default_str();
  sm->add_option("--steps", sim.steps, "Number of RK4 steps")->check(CLI::PositiveNumber)->capture_default_str();
  sm->add_option("--record-every", sim.record_every, "Keep every k-th step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sm->add_option("--basis", sim.basis, "Integrate in the vertex or the coefficient basis")
      ->check(CLI::IsMember({"vertex", "coefficient"}))
      ->capture_default_str();
  sm->add_option("--rezero", sim.rezero, "Re-centre the phases at this time and drop earlier samples");

  PredictArgs pr;
  auto* pd = app.add_subcommand("predict", "Linear limits and discriminants (prediction.json)");
  pd->add_option("--graph", pr.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  pd->add_option("--omega", pr.omega, "Natural frequencies: JSON file or inline array")->required();
  pd->add_option("--sigma", pr.sigma, "Coupling strength")->check(CLI::PositiveNumber)->capture_default_str();
  pd->add_option("--beta", pr.beta, "Per-edge phase lags: JSON file or inline array");
  pd->add_option("--mode", pr.mode, "Restrict the discriminant to one mode (>= 1)");
  pd->add_option("--time", pr.time, "Evaluate the single-mode solution of --mode at this time");
  pd->add_option("--alpha0", pr.alpha0, "Initial coefficient for the single-mode solution")->capture_default_str();
  pd->add_option("--margin", pr.margin, "Validity margin of the tangent solution")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string ex_name, ex_config;
  auto* ex = app.add_subcommand("experiment", "Run a scripted scenario");
  ex->add_option("name", ex_name, "Scenario name")->required()->check(CLI::IsMember(scenario_names()));
  ex->add_option("--config", ex_config, "Scenario config JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(g, gen_kind, gen_config);
    if (an->parsed()) return cmd_analyze(g, an_graph, an_partition, an_gamma);
    if (sm->parsed()) return cmd_simulate(g, sim);
    if (pd->parsed()) return cmd_predict(g, pr);
    if (ex->parsed()) return cmd_experiment(g, ex_name, ex_config);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
