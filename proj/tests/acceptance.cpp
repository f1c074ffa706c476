// Acceptance driver: runs the scripted scenarios with their shipped configs
// and a fixed seed, re-checks the reported metrics against the tolerances
// pinned below and prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "specsync/experiments.hpp"
#include "specsync/io.hpp"

using namespace specsync;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 0;

struct Run {
  ScenarioResult result;
  Json config;
  double seconds = 0.0;
};

Run run(const std::string& name) {
  Run r;
  r.config = read_json(fs::path(SPECSYNC_CONFIG_DIR) / "scenarios" / (name + ".json"));
  auto t0 = std::chrono::steady_clock::now();
  r.result = run_scenario(name, r.config, kSeed);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Collects individual conditions for one criterion.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void scenario(const Run& r) {
    for (const auto& a : r.result.assertions) require(a.passed, r.result.id + "." + a.name + " (" + a.detail + ")");
  }
  void runtime(const Run& r, double limit) {
    require(r.seconds < limit, r.result.id + " took " + std::to_string(r.seconds) + " s, limit " + std::to_string(limit));
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += ", ";
    notes_ += s;
  }
  bool pass() const { return pass_; }
  std::string text() const { return pass_ ? notes_ : failures_; }

 private:
  bool pass_ = true;
  std::string notes_, failures_;
};

std::string num(double x) {
  std::ostringstream ss;
  ss.precision(3);
  ss << x;
  return ss.str();
}

double metric(const Run& r, const char* key) { return r.result.metrics.at(key).get<double>(); }

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

// Reorders per-eta values by decreasing eta.
std::vector<double> by_decreasing_eta(const std::vector<double>& etas, const std::vector<double>& vals) {
  std::vector<std::size_t> idx(etas.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return etas[a] > etas[b]; });
  std::vector<double> out;
  for (auto i : idx) out.push_back(vals[i]);
  return out;
}

Verdict ac1() {
  Verdict v;
  auto r = run("spectral_identities");
  v.scenario(r);
  v.require(r.result.metrics.at("graphs") == 100, "expected 100 graphs");
  v.require(metric(r, "max_laplacian_error") <= 1e-12, "L = B W B^T beyond 1e-12");
  v.require(metric(r, "max_eigen_residual") <= 1e-8, "eigen residual beyond 1e-8");
  v.require(metric(r, "max_pairing_error") <= 1e-8, "edge pairing beyond 1e-8");
  v.runtime(r, 10.0);
  v.note("residual " + num(metric(r, "max_eigen_residual")) + ", pairing " + num(metric(r, "max_pairing_error")) +
         ", " + num(r.seconds) + " s");
  return v;
}

Verdict ac2() {
  Verdict v;
  auto r = run("aep_commutation");
  v.scenario(r);
  v.require(metric(r, "max_commutation_error") <= 1e-9, "||LP - PL^pi||_max beyond 1e-9");
  v.require(metric(r, "max_relative_lift_residual") <= 1e-8, "lifted eigenpair residual beyond 1e-8");
  v.require(r.result.metrics.at("non_aep_partitions") == 100, "expected 100 random partitions");
  v.require(r.result.metrics.at("non_aep_rejected") == 100, "a random partition passed the AEP check");
  v.runtime(r, 10.0);
  v.note("commutation " + num(metric(r, "max_commutation_error")) + ", lift " +
         num(metric(r, "max_relative_lift_residual")) + ", 100/100 rejected, " + num(r.seconds) + " s");
  return v;
}

Verdict ac3() {
  Verdict v;
  auto r = run("basis_equivalence");
  v.scenario(r);
  v.require(r.result.metrics.at("systems") == 20, "expected 20 systems");
  v.require(metric(r, "max_phase_difference") <= 1e-6, "bases differ by more than 1e-6");
  v.runtime(r, 60.0);
  v.note("max |dtheta| " + num(metric(r, "max_phase_difference")) + ", " + num(r.seconds) + " s");
  return v;
}

Verdict ac4() {
  Verdict v;
  auto r = run("fig2_cluster_sync");
  v.scenario(r);
  std::size_t checked = 0;
  for (const auto& m : r.result.metrics.at("modes")) {
    double pred = m.at("predicted").get<double>();
    if (std::abs(pred) >= 0.1) continue;
    ++checked;
    v.require(m.at("error").get<double>() <= 0.1 * std::abs(pred) + 1e-9,
              "mode " + m.at("mode").dump() + " misses its limit by more than 10%");
  }
  v.require(checked > 0, "no mode with |alpha_inf| < 0.1");
  v.require(metric(r, "nonstructural_energy_fraction") < 1e-3, "nonstructural energy >= 0.1%");
  v.require(metric(r, "max_cluster_spread") <= 1e-4, "cluster spread above 1e-4");
  v.runtime(r, 30.0);
  v.note(std::to_string(checked) + " small modes, worst rel. error " + num(metric(r, "worst_small_mode_relative_error")) +
         ", nonstructural energy " + num(metric(r, "nonstructural_energy_fraction")) + ", spread " +
         num(metric(r, "max_cluster_spread")) + ", " + num(r.seconds) + " s");
  return v;
}

Verdict ac5() {
  Verdict v;
  auto r = run("fig3_linearization_error");
  v.scenario(r);
  auto per_seed = r.result.metrics.at("per_seed_spearman").get<std::vector<double>>();
  v.require(per_seed.size() == 10, "expected 10 seeds");
  v.require(metric(r, "pooled_spearman") >= 0.5, "pooled Spearman below 0.5");
  for (double s : per_seed) v.require(s >= 0.5, "a seed has Spearman below 0.5");
  v.note("pooled Spearman " + num(metric(r, "pooled_spearman")) + ", lowest per-seed " +
         num(*std::min_element(per_seed.begin(), per_seed.end())) + ", " + num(r.seconds) + " s");
  return v;
}

Verdict ac6() {
  Verdict v;
  auto r = run("fig4_hierarchical");
  v.scenario(r);
  v.require(r.result.metrics.at("seeds").size() == 10, "expected 10 seeds");
  v.require(r.result.metrics.at("ordered_seeds").get<int>() >= 8, "fewer than 8 of 10 seeds show four ordered regimes");
  v.require(metric(r, "worst_decay_error") <= 0.05, "decay rate off by more than 5%");
  v.runtime(r, 300.0);
  v.note(r.result.metrics.at("ordered_seeds").dump() + "/10 seeds ordered, worst decay error " +
         num(metric(r, "worst_decay_error")) + ", " + num(r.seconds) + " s");
  return v;
}

Verdict ac7() {
  Verdict v;
  auto r = run("fig5_qep");
  v.scenario(r);
  auto etas = r.result.metrics.at("etas").get<std::vector<double>>();
  std::vector<double> want{0.2, 0.1, 0.05, 0.01};
  for (double e : want)
    v.require(std::find(etas.begin(), etas.end(), e) != etas.end(), "eta " + num(e) + " missing from the sweep");
  auto spread = by_decreasing_eta(etas, r.result.metrics.at("mean_spread").get<std::vector<double>>());
  auto score = by_decreasing_eta(etas, r.result.metrics.at("mean_score").get<std::vector<double>>());
  v.require(strictly_decreasing(spread), "mean cluster spread not decreasing as eta shrinks");
  v.require(strictly_decreasing(score), "mean qep_score not decreasing as eta shrinks");
  v.require(metric(r, "worst_approximation_ratio") <= 1.0, "approximation bound exceeded");
  v.note("worst error/bound ratio " + num(metric(r, "worst_approximation_ratio")) + ", " + num(r.seconds) + " s");
  return v;
}

Verdict ac8() {
  Verdict v;
  auto r = run("fig6_single_mode");
  v.scenario(r);
  const auto& d = r.result.metrics.at("discriminants");
  for (const auto& e : d) {
    double delta = e.at("delta").get<double>();
    if (e.at("mode") == 1) v.require(delta < 0.0, "Delta_1 not negative");
    else v.require(delta > 0.0, "Delta_" + e.at("mode").dump() + " not positive");
  }
  const double threshold = metric(r, "activity_threshold");
  v.require(metric(r, "p2p_alpha1_final_third") > 10.0 * threshold, "alpha_1 oscillation below 10x threshold");
  v.require(metric(r, "max_nonstructural") < threshold, "a nonstructural mode crossed the threshold");
  v.require(metric(r, "tangent_relative_error") < 0.1, "tangent solution off by 10% or more");
  v.require(metric(r, "tangent_window") > 0.0, "empty comparison window");
  v.runtime(r, 60.0);
  v.note("Delta_1 " + num(d[0].at("delta").get<double>()) + ", p2p " + num(metric(r, "p2p_alpha1_final_third")) +
         ", tangent rel. error " + num(metric(r, "tangent_relative_error")) + " over [0, " +
         num(metric(r, "tangent_window")) + "], " + num(r.seconds) + " s");
  return v;
}

Verdict ac9() {
  Verdict v;
  auto a = run("phase_lag_ex1");
  auto b = run("phase_lag_ex2");
  v.scenario(a);
  v.scenario(b);
  v.require(metric(a, "relative_change") < 0.05, "nonstructural equilibria moved 5% or more when sigma doubled");
  v.require(metric(b, "relative_error") < 0.1, "uniform-weight limit off by 10% or more");
  v.note("sigma change " + num(metric(a, "relative_change")) + ", uniform-weight error " +
         num(metric(b, "relative_error")));
  return v;
}

Verdict ac10() {
  Verdict v;
  auto r = run("sbm_limit");
  v.scenario(r);
  auto sizes = r.result.metrics.at("sizes").get<std::vector<double>>();
  v.require(sizes.size() >= 2 && sizes.front() == 100 && sizes.back() == 1600, "sizes must run from 100 to 1600");
  const auto& means = r.result.metrics.at("batch_means");
  std::size_t dec = 0;
  for (const auto& m : means) dec += strictly_decreasing(m.get<std::vector<double>>()) ? 1 : 0;
  v.require(means.size() == 10, "expected 10 batches");
  v.require(10 * dec >= 9 * means.size(), "fewer than 90% of batches decrease");
  v.require(metric(r, "identity_error") <= 1e-10, "noise identity beyond 1e-10");
  v.runtime(r, 120.0);
  v.note(std::to_string(dec) + "/" + std::to_string(means.size()) + " batches decreasing, identity " +
         num(metric(r, "identity_error")) + ", " + num(r.seconds) + " s");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"AC1 spectral identities", ac1},       {"AC2 AEP commutation and lifting", ac2},
      {"AC3 basis equivalence", ac3},         {"AC4 small-mode limits", ac4},
      {"AC5 linearization error ranking", ac5}, {"AC6 transient hierarchy", ac6},
      {"AC7 QEP bounds and monotonicity", ac7}, {"AC8 single unstable mode", ac8},
      {"AC9 phase lag", ac9},                 {"AC10 SBM concentration", ac10}};
  int failed = 0;
  for (const auto& [label, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& ex) {
      v.require(false, std::string("exception: ") + ex.what());
    }
    if (!v.pass()) ++failed;
    std::cout << (v.pass() ? "PASS " : "FAIL ") << label << ": " << v.text() << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
