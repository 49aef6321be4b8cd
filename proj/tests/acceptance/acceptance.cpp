// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "reachpred/commands.hpp"
#include "reachpred/learn.hpp"
#include "reachpred/levelset.hpp"
#include "reachpred/mip3.hpp"
#include "reachpred/scenario.hpp"
#include "reachpred/shfrs.hpp"
#include "reachpred/trajectory_io.hpp"
#include "reachpred/vf_io.hpp"
#include "support.hpp"

using namespace reachpred;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared state between criteria.
struct Context {
  testing::TempDir work{"acceptance"};
  std::optional<BrsResult> brs;
  fs::path vf_file;
  fs::path data_dir;
  double brs_seconds = 0.0;

  const ValueFunction& vf() {
    if (!brs) {
      const auto t0 = Clock::now();
      brs = solve_brs(grid_preset("default"), {});
      brs_seconds = seconds_since(t0);
      vf_file = work.path / "brs.hjvf";
      save_value_function(vf_file, brs->vf);
    }
    return brs->vf;
  }

  // 8 subjects x 50 scenes, shared by criteria 4 and 5.
  const fs::path& dataset() {
    if (data_dir.empty()) {
      vf();
      GendataCommand g;
      g.subjects = 8;
      g.scenes = 50;
      g.seed = 1;
      g.vf = vf_file;
      g.out = work.path / "data";
      cmd_gendata(g);
      data_dir = g.out;
    }
    return data_dir;
  }
};

Outcome theorem(Context&) {
  const auto t0 = Clock::now();
  const TheoremReport rep = verify_theorem(2.0, true);
  std::vector<std::array<bool, 3>> seen;
  for (const auto& p : rep.patterns)
    if (std::find(seen.begin(), seen.end(), p.active) == seen.end()) seen.push_back(p.active);
  const RewardMatrix full = rcm_full();
  const MipSolution best = solve_mip(full);
  AvoidAssignment want, a20, a34;
  want.ulo[0][1] = want.ulo[1][2] = want.ulo[2][0] = 1;
  a20.ulo[1][0] = a20.ulo[2][0] = 1;
  a34.ulo[0][2] = a34.ulo[1][2] = 1;
  // exhaustive oracle over every zero-diagonal binary
  double brute = -1e300;
  for (int m = 0; m < 64; ++m) {
    AvoidAssignment a;
    const int cells[6][2] = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
    for (int b = 0; b < 6; ++b)
      if (m >> b & 1) a.ulo[cells[b][0]][cells[b][1]] = 1;
    if (a.feasible()) brute = std::max(brute, objective(full, a));
  }
  const double o20 = objective(full, a20), o34 = objective(full, a34);
  const double secs = seconds_since(t0);
  const bool ok = rep.pass && seen.size() == 8 && best.assignment == want && best.objective == 77.0 &&
                  brute == 77.0 && o20 == 20.0 && o34 == 34.0 && secs < 1.0;
  return {ok, fmt("patterns=%zu cases=%zu optimum=%s obj=%.0f brute=%.0f candidates=%.0f,%.0f time=%.3fs",
                  seen.size(), rep.patterns.size(), best.assignment.str().c_str(), best.objective, brute, o20,
                  o34, secs)};
}

Outcome feasible_count(Context&) {
  const auto t0 = Clock::now();
  const auto got = enumerate_feasible();
  const double secs = seconds_since(t0);
  int brute = 0;
  for (int m = 0; m < 64; ++m) {
    int u[3][3] = {};
    const int cells[6][2] = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
    for (int b = 0; b < 6; ++b)
      if (m >> b & 1) u[cells[b][0]][cells[b][1]] = 1;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      ok = ok && u[i][0] + u[i][1] + u[i][2] <= 1;
      for (int j = 0; j < 3; ++j) ok = ok && !(u[i][j] && u[j][i]);
    }
    brute += ok;
  }
  const bool ok = static_cast<int>(got.size()) == brute && brute == 18 && secs < 1e-3;
  return {ok, fmt("enumerated=%zu brute=%d time=%.1fus", got.size(), brute, secs * 1e6)};
}

// Random predictor whose output depends on the history length and a per-trial seed.
Predictor random_predictor(std::uint64_t seed) {
  return [seed](std::span<const JointState> h) {
    std::mt19937_64 rng(seed * 1000003ULL + h.size());
    std::gamma_distribution<double> g(0.7, 1.0);
    ActionProbs p{g(rng), g(rng), g(rng)};
    const double s = p[0] + p[1] + p[2];
    for (double& v : p) v /= s;
    return p;
  };
}

Outcome shfrs_nesting(Context&) {
  const auto t0 = Clock::now();
  const Grid3 grid = grid_preset("frs");
  const ShfrsConfig cfg;
  TubeCache cache(256);
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> steps(0, 45);
  std::uniform_int_distribution<int> act(0, 2);
  int trials_ok = 0;
  std::size_t worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Scene scene = generate_scene(1000 + static_cast<std::uint64_t>(trial));
    const int n = steps(rng);
    std::vector<int> keys(n + 1);
    for (int& k : keys) k = act(rng);
    const Trajectory t = simulate_episode(scene, [&](const VehicleState&, const VehicleState&, int k) {
      return action_omega(static_cast<Action>(keys[std::min(k, n)]));
    });
    std::vector<JointState> hist;
    for (int i = 0; i <= n; ++i) hist.push_back({t.samples[i].human, t.samples[i].robot});
    const BoundSchedule s = algorithm1_bounds(hist, random_predictor(trial), cfg, scene.goal);
    const Shfrs sh = build_shfrs(s, hist.back().human, cfg, grid, {}, false, &cache);
    bool ok = sh.nested;
    for (std::size_t j = 0; j + 1 < sh.tubes.size(); ++j) {
      const SubsetReport r = subset_report(sh.tubes[j], sh.tubes[j + 1], grid.cell());
      ok = ok && r.ok;
      worst = std::max(worst, r.violations);
    }
    trials_ok += ok;
  }
  const double secs = seconds_since(t0);
  return {trials_ok == 50 && secs < 300.0,
          fmt("nested=%d/50 max_violations=%zu time=%.1fs", trials_ok, worst, secs)};
}

Outcome probabilities(Context& ctx) {
  const StoredDataset data = load_dataset_dir(ctx.dataset());
  std::vector<Trajectory> trajs;
  for (std::size_t s = 0; s < 2; ++s)
    trajs.insert(trajs.end(), data.subjects[s].trajectories.begin(), data.subjects[s].trajectories.end());
  const Dataset d = to_dataset(data.subjects[0].trajectories, &data.vf, FeatureSetId::Bhrd, Task::exact, "S01");
  const Classifier model = train(d, Family::logistic, {}, 1);
  const auto t0 = Clock::now();
  const ProbabilityEstimate e =
      estimate_probabilities(trajs, model_predictor(model, &data.vf), ShfrsConfig{}, grid_preset("frs"));
  const double secs = seconds_since(t0);
  bool mono = true;
  for (std::size_t j = 1; j < e.p.size(); ++j) mono = mono && e.p[j] >= e.p[j - 1] && e.p_on_grid[j] >= e.p_on_grid[j - 1];
  std::string ps;
  for (double p : e.p) ps += fmt("%.3f ", p);
  const bool ok = trajs.size() >= 100 && e.p.size() == 5 && mono && e.monotone && e.p_on_grid.back() == 1.0 &&
                  e.off_grid_fraction() < 0.01;
  return {ok, fmt("trajectories=%zu anchors=%zu p=[%s] off_grid=%.4f%% time=%.1fs", trajs.size(), e.anchors,
                  ps.c_str(), 100.0 * e.off_grid_fraction(), secs)};
}

Outcome ablation(Context& ctx) {
  const auto t0 = Clock::now();
  TrainEvalCommand c;
  c.data = ctx.dataset();
  c.tasks = {Task::exact};
  c.models = {Family::logistic, Family::tree};
  c.feature_sets = {FeatureSetId::Bd, FeatureSetId::Bhrd};
  c.save_models = false;
  c.out = ctx.work.path / "ablation";
  cmd_train_eval(c);
  const double secs = seconds_since(t0);
  const auto rep = load_json(c.out / "metrics_task_I.json");
  std::map<std::string, double> acc;
  for (const auto& r : rep.at("results"))
    acc[r.at("model").get<std::string>() + "/" + r.at("feature_set").get<std::string>()] = r.at("accuracy");
  bool ok = secs < 600.0;
  std::string detail;
  for (const char* model : {"LR", "DT"}) {
    for (const auto& cj : rep.at("comparisons")) {
      if (cj.at("model") != model || cj.at("pair") != nlohmann::json::array({"Bhrd", "Bd"})) continue;
      const double p = cj.at("p");
      const double hi = acc[std::string(model) + "/Bhrd"], lo = acc[std::string(model) + "/Bd"];
      const bool leg = hi > lo && p < 0.05;
      ok = ok && leg;
      detail += fmt("%s Bhrd=%.2f Bd=%.2f U=%.1f p=%.4f [%s]; ", model, hi, lo, cj.at("U").get<double>(), p,
                    leg ? "ok" : "fail");
    }
  }
  return {ok, detail + fmt("time=%.1fs", secs)};
}

Outcome brs_validity(Context& ctx) {
  const ValueFunction& vf = ctx.vf();
  const Grid3& g = vf.grid;
  std::size_t above = 0, zone_pos = 0;
  double asym = 0.0;
  for (std::size_t i = 0; i < g.dims[0]; ++i)
    for (std::size_t j = 0; j < g.dims[1]; ++j)
      for (std::size_t k = 0; k < g.dims[2]; ++k) {
        const double sd = signed_distance_danger_zone({g.coord(0, i), g.coord(1, j), g.coord(2, k)}, 3.0);
        const double v = vf.at(i, j, k);
        above += v > sd + 1e-9;
        zone_pos += sd < 0.0 && v > 0.0;
        asym = std::max(asym, std::abs(v - vf.at(i, g.dims[1] - 1 - j, (g.dims[2] - k) % g.dims[2])));
      }

  // Probes outside the danger zone with |V| >= 0.5, ten on each side of the zero level.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> xy(-14.0, 14.0), th(-kPi, kPi);
  std::vector<std::array<double, 3>> safe, unsafe;
  while (safe.size() < 10 || unsafe.size() < 10) {
    const double x = xy(rng), y = xy(rng), t = th(rng);
    if (std::hypot(x, y) < 3.5) continue;
    const double v = value_at(vf, x, y, t).value;
    if (v >= 0.5 && safe.size() < 10) safe.push_back({x, y, t});
    if (v <= -0.5 && unsafe.size() < 10) unsafe.push_back({x, y, t});
  }
  const auto t_mc = Clock::now();
  int agree = 0;
  std::uint64_t seed = 1;
  for (const auto& p : safe) agree += !testing::game_rollouts(vf, p[0], p[1], p[2], 10000, seed++).captured;
  for (const auto& p : unsafe) agree += testing::game_rollouts(vf, p[0], p[1], p[2], 10000, seed++).captured;
  const double mc_secs = seconds_since(t_mc);

  // Refinement: coarse against default at 100 interior probes.
  const ValueFunction coarse = solve_brs(grid_preset("coarse"), {}).vf;
  double worst = 0.0;
  std::uniform_real_distribution<double> inner(-10.0, 10.0);
  for (int n = 0; n < 100; ++n) {
    const double x = inner(rng), y = inner(rng), t = th(rng);
    worst = std::max(worst, std::abs(value_at(vf, x, y, t).value - value_at(coarse, x, y, t).value));
  }
  const double cell = coarse.grid.cell();
  const bool ok = ctx.brs->converged && above == 0 && zone_pos == 0 && asym < 1e-6 && agree >= 19 &&
                  worst < cell && ctx.brs_seconds < 600.0;
  return {ok, fmt("iters=%d solve=%.1fs above_sd=%zu zone_positive=%zu asym=%.2e mc_agree=%d/20 (%.0fs) "
                  "refine_max=%.3f coarse_cell=%.2f",
                  ctx.brs->iterations, ctx.brs_seconds, above, zone_pos, asym, agree, mc_secs, worst, cell)};
}

Outcome frs_arcs(Context&) {
  const Grid3 g = grid_preset("frs");
  const double cell = g.cell();
  const TubeSchedule straight(10, ScheduleEntry{0.2, {0.0, 0.0}});
  const TubeSchedule full(10, ScheduleEntry{0.2, {-0.5, 0.5}});
  const auto vs = solve_frs(g, {0, 0, 0}, straight);
  const auto vfull = solve_frs(g, {0, 0, 0}, full);
  double worst_s = -1e300, worst_a = -1e300;
  for (int i = 0; i <= 20; ++i) {
    const double t = 0.1 * i;
    worst_s = std::max(worst_s, value_at(vs, 2.0 * t, 0.0, 0.0).value);
    for (double w : {0.5, -0.5}) {
      const double th = w * t;
      const double x = 2.0 / w * std::sin(th), y = 2.0 / w * (1.0 - std::cos(th));
      worst_a = std::max(worst_a, value_at(vfull, x, y, th).value);
    }
  }
  // the straight tube must not reach the max-turn end point
  const double off = value_at(vs, 4.0 * std::sin(1.0), 4.0 * (1.0 - std::cos(1.0)), 1.0).value;
  const bool ok = worst_s <= 1.5 * cell && worst_a <= 1.5 * cell && off > 0.0;
  return {ok, fmt("straight_max=%.3f arc_max=%.3f limit=%.3f straight_at_arc_end=%.3f", worst_s, worst_a,
                  1.5 * cell, off)};
}

Outcome gradient_check(Context&) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, 2);
  std::vector<std::vector<double>> x(120, std::vector<double>(6));
  std::vector<int> y(120);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double& v : x[i]) v = n01(rng);
    y[i] = cls(rng);
  }
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    std::vector<double> w(3 * 7);
    for (double& v : w) v = n01(rng);
    const auto a = logistic_gradient(w, x, y, 3, 0.01);
    double num2 = 0.0, den2 = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(w[k]));
      auto wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      const double fd = (logistic_objective(wp, x, y, 3, 0.01) - logistic_objective(wm, x, y, 3, 0.01)) / (2 * h);
      num2 += (a[k] - fd) * (a[k] - fd);
      den2 += std::max(a[k] * a[k], fd * fd);
    }
    worst = std::max(worst, std::sqrt(num2 / std::max(den2, 1e-300)));
  }
  return {worst < 1e-5, fmt("points=10 max_rel_error=%.2e", worst)};
}

Outcome three_vehicles(Context& ctx) {
  const auto [init, goals] = symmetric_scenario(15.0);
  ThreeVehicleOptions o;
  o.horizon = 30.0;
  o.dt = 0.05;
  const auto r = simulate_three(init, goals, ctx.vf(), o);
  return {r.safe && r.min_separation >= 3.0 && r.steps == 600,
          fmt("steps=%d min_separation=%.3f at t=%.2f activations=%d", r.steps, r.min_separation,
              r.min_separation_time, r.activations)};
}

// Every file under `dir`; manifests drop their wall time.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string bytes = ss.str();
    if (e.path().filename() == "run_manifest.json") {
      auto j = nlohmann::json::parse(bytes);
      j.erase("wall_time_s");
      bytes = j.dump();
    }
    out[fs::relative(e.path(), dir).generic_string()] = bytes;
  }
  return out;
}

Outcome determinism(Context& ctx) {
  const fs::path root = ctx.work.path / "det";
  GendataCommand g;
  g.subjects = 2;
  g.scenes = 6;
  g.seed = 5;
  g.vf = ctx.vf_file.empty() ? (ctx.vf(), ctx.vf_file) : ctx.vf_file;
  g.out = root / "data";
  TrainEvalCommand te;
  te.data = g.out;
  te.models = {Family::logistic, Family::tree, Family::svm};
  te.feature_sets = {FeatureSetId::B, FeatureSetId::Bhrd};
  te.folds = 3;
  te.out = root / "results";
  ShfrsCommand sh;
  sh.model = te.out / "models" / "S01" / "I_LR_Bhrd.json";
  sh.data = g.out / "S01.jsonl";
  sh.step = 20;
  sh.max_trajectories = 3;
  sh.out = root / "shfrs";

  std::string detail;
  bool ok = true;
  auto twice = [&](const char* name, const fs::path& out, const std::function<void()>& run) {
    fs::remove_all(out);
    run();
    const auto a = snapshot(out);
    fs::remove_all(out);
    run();
    const auto b = snapshot(out);
    std::size_t differ = 0;
    for (const auto& [k, v] : a) differ += !b.count(k) || b.at(k) != v;
    differ += b.size() > a.size() ? b.size() - a.size() : 0;
    ok = ok && differ == 0 && !a.empty();
    detail += fmt("%s files=%zu differing=%zu; ", name, a.size(), differ);
  };
  twice("gendata", g.out, [&] { cmd_gendata(g); });
  twice("train-eval", te.out, [&] { cmd_train_eval(te); });
  twice("shfrs", sh.out, [&] { cmd_shfrs(sh); });
  return {ok, detail};
}

}  // namespace

int main() {
  Context ctx;
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)(Context&);
  };
  const std::vector<Criterion> order{
      {1, "theorem verification", theorem},
      {2, "feasible-set size", feasible_count},
      {6, "BRS validity", brs_validity},
      {7, "FRS against Dubins arcs", frs_arcs},
      {8, "logistic gradient", gradient_check},
      {9, "three-vehicle safety", three_vehicles},
      {3, "SHFRS nesting", shfrs_nesting},
      {5, "feature ablation", ablation},
      {4, "probability corollaries", probabilities},
      {10, "determinism", determinism},
  };
  std::map<int, std::string> lines;
  int failed = 0;
  for (const auto& c : order) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    lines[c.id] = fmt("%s %2d %-24s %7.1fs  %s", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0),
                      o.detail.c_str());
    std::cout << lines[c.id] << std::endl;
  }
  std::cout << "\nsummary\n";
  for (const auto& [id, line] : lines) std::cout << line << "\n";
  std::cout << (failed ? fmt("%d criteria failed\n", failed) : std::string("all criteria passed\n"));
  return failed ? 1 : 0;
}
