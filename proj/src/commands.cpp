#include "reachpred/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "reachpred/codec.hpp"
#include "reachpred/eval.hpp"
#include "reachpred/manifest.hpp"
#include "reachpred/mip3.hpp"
#include "reachpred/trajectory_io.hpp"
#include "reachpred/vf_io.hpp"

namespace fs = std::filesystem;

namespace reachpred {

namespace {

Grid3 parse_grid(const std::string& spec) {
  try {
    return grid_preset(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir.string() + ": " + ec.message());
}

ValueFunction solve_or_throw(const Grid3& g, const BrsOptions& opts) {
  BrsResult r = solve_brs(g, {}, opts);
  if (!r.converged)
    throw NumericalError("BRS did not converge in " + std::to_string(r.iterations) +
                         " iterations (residual " + std::to_string(r.residual) + ")");
  for (double v : r.vf.values)
    if (!std::isfinite(v)) throw NumericalError("BRS produced non-finite values");
  return std::move(r.vf);
}

ValueFunction load_vf(const fs::path& p) {
  try {
    return load_value_function(p);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

nlohmann::json hyper_json(Family f, const Hyper& h) {
  switch (f) {
    case Family::logistic: return {{"l2", h.l2}};
    case Family::tree: return {{"max_depth", h.max_depth}, {"min_leaf", h.min_leaf}};
    case Family::svm: return {{"c", h.c}};
  }
  return nullptr;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

nlohmann::json cmd_brs(const BrsCommand& c) {
  const Grid3 g = parse_grid(c.grid);
  RunManifest m("brs");
  m.config = {{"grid", c.grid},
              {"capture_radius", c.options.capture_radius},
              {"tol", c.options.tol},
              {"max_iters", c.options.max_iters},
              {"cfl", c.options.cfl}};
  BrsResult r;
  try {
    r = solve_brs(g, {}, c.options);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!r.converged)
    throw NumericalError("BRS did not converge in " + std::to_string(r.iterations) + " iterations (residual " +
                         std::to_string(r.residual) + ")");
  if (c.out.has_parent_path()) make_dir(c.out.parent_path());
  save_value_function(c.out, r.vf);
  m.add_output(c.out);
  m.write(fs::path(c.out.string() + ".manifest.json"));
  return {{"out", c.out.string()}, {"iterations", r.iterations}, {"residual", r.residual}, {"dt", r.dt}};
}

nlohmann::json cmd_gendata(const GendataCommand& c) {
  if (c.subjects < 1) throw UsageError("gendata: need at least one subject");
  if (c.scenes < 1) throw UsageError("gendata: need at least one scene");
  RunManifest m("gendata");
  m.config = {{"subjects", c.subjects},
              {"scenes", c.scenes},
              {"grid", c.grid},
              {"vf", c.vf.string()},
              {"policy_ranges",
               {{"tau_min", c.ranges.tau_min},
                {"tau_max", c.ranges.tau_max},
                {"release_gap", c.ranges.release_gap},
                {"eta_min", c.ranges.eta_min},
                {"eta_max", c.ranges.eta_max}}}};
  m.seeds = {{"seed", c.seed}};

  ValueFunction vf;
  if (!c.vf.empty()) {
    vf = load_vf(c.vf);
    m.add_input(c.vf);
  } else {
    vf = solve_or_throw(parse_grid(c.grid), {});
  }

  make_dir(c.out);
  const fs::path vf_out = c.out / "brs.hjvf";
  save_value_function(vf_out, vf);
  m.add_output(vf_out);

  const auto subjects = make_dataset(c.scenes, c.subjects, c.ranges, c.seed, vf);
  nlohmann::json listing = nlohmann::json::array();
  for (const auto& sd : subjects) {
    const fs::path file = c.out / (sd.subject_id + ".jsonl");
    save_trajectories(file, sd.trajectories);
    m.add_output(file);
    listing.push_back({{"subject_id", sd.subject_id},
                       {"file", file.filename().string()},
                       {"policy_params",
                        {{"tau", sd.policy.tau},
                         {"tau_release", sd.policy.tau_release},
                         {"eta", sd.policy.eta},
                         {"seed", sd.policy.seed}}},
                       {"scene_seeds", sd.scene_seeds}});
  }
  const fs::path manifest = c.out / "dataset.json";
  save_json(manifest, {{"subjects", listing},
                       {"scenes", c.scenes},
                       {"seed", c.seed},
                       {"dt", kSampleDt},
                       {"value_function", vf_out.filename().string()}});
  m.add_output(manifest);
  m.write(c.out / "run_manifest.json");
  return {{"out", c.out.string()}, {"subjects", c.subjects}, {"scenes", c.scenes}};
}

StoredDataset load_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("data directory not found: " + dir.string());
  const fs::path manifest = dir / "dataset.json";
  if (!fs::exists(manifest)) throw UsageError("missing " + manifest.string());
  nlohmann::json j;
  try {
    j = load_json(manifest);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  StoredDataset d;
  try {
    d.vf_path = dir / j.at("value_function").get<std::string>();
    for (const auto& s : j.at("subjects")) {
      StoredSubject ss;
      ss.subject_id = s.at("subject_id").get<std::string>();
      ss.file = dir / s.at("file").get<std::string>();
      d.subjects.push_back(std::move(ss));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(manifest.string() + ": " + e.what());
  }
  d.vf = load_vf(d.vf_path);
  for (auto& s : d.subjects) {
    try {
      s.trajectories = load_trajectories(s.file);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  return d;
}

namespace {

/// Per-trajectory avoid/no-avoid sequences from row-level classes.
std::vector<TrajectoryPrediction> per_trajectory(const Dataset& d, const std::vector<int>& predicted) {
  std::map<int, TrajectoryPrediction> by;
  const int straight = class_of(Action::straight, d.task);
  for (std::size_t n = 0; n < d.y.size(); ++n) {
    auto& tp = by[d.traj[n]];
    tp.predicted.push_back(predicted[n] != straight ? 1 : 0);
    tp.truth.push_back(d.y[n] != straight ? 1 : 0);
  }
  std::vector<TrajectoryPrediction> out;
  for (auto& [k, tp] : by) out.push_back(std::move(tp));
  return out;
}

}  // namespace

nlohmann::json cmd_train_eval(const TrainEvalCommand& c) {
  if (c.folds < 2) throw UsageError("train-eval: need at least 2 folds");
  if (c.models.empty() || c.feature_sets.empty() || c.tasks.empty())
    throw UsageError("train-eval: empty model, feature-set or task list");
  const StoredDataset data = load_dataset_dir(c.data);

  RunManifest m("train-eval");
  nlohmann::json tasks = nlohmann::json::array(), models = nlohmann::json::array(),
                 sets = nlohmann::json::array();
  for (Task t : c.tasks) tasks.push_back(std::string(task_name(t)));
  for (Family f : c.models) models.push_back(std::string(family_name(f)));
  for (FeatureSetId s : c.feature_sets) sets.push_back(std::string(feature_set_name(s)));
  m.config = {{"data", c.data.string()},
              {"tasks", tasks},
              {"models", models},
              {"feature_sets", sets},
              {"folds", c.folds},
              {"lr", c.settings.lr},
              {"lr_epochs", c.settings.lr_epochs},
              {"svm_epochs", c.settings.svm_epochs}};
  m.seeds = {{"seed", c.seed}};
  m.add_input(c.data / "dataset.json");
  m.add_input(data.vf_path);
  for (const auto& s : data.subjects) m.add_input(s.file);
  make_dir(c.out);

  const std::string vf_abs = fs::absolute(data.vf_path).lexically_normal().string();
  nlohmann::json summary = nlohmann::json::array();
  for (Task task : c.tasks) {
    const std::string tname(task_name(task));
    nlohmann::json results = nlohmann::json::array();
    // accuracy[model][set] = per-subject mean CV accuracy
    std::map<Family, std::map<FeatureSetId, std::vector<double>>> acc;
    nlohmann::json subject_ids = nlohmann::json::array();
    for (const auto& s : data.subjects) subject_ids.push_back(s.subject_id);

    for (FeatureSetId set : c.feature_sets) {
      std::vector<Dataset> per_subject;
      for (const auto& s : data.subjects)
        per_subject.push_back(to_dataset(s.trajectories, &data.vf, set, task, s.subject_id));
      for (Family f : c.models) {
        nlohmann::json folds = nlohmann::json::array();
        std::vector<double> ds, de;
        for (std::size_t si = 0; si < per_subject.size(); ++si) {
          const Dataset& d = per_subject[si];
          CvResult cv;
          try {
            cv = cross_validate(d, f, default_grid(f), c.folds, c.seed, c.settings);
          } catch (const std::invalid_argument& e) {
            throw UsageError(d.subject_id + ": " + e.what());
          } catch (const TrainingError& e) {
            throw NumericalError(d.subject_id + ": " + e.what());
          }
          acc[f][set].push_back(cv.mean_accuracy);
          const auto tps = per_trajectory(d, cv.oof_prediction);
          ds.push_back(d_start(tps));
          de.push_back(d_end(tps));
          folds.push_back({{"subject", d.subject_id},
                           {"fold_accuracy", cv.fold_accuracy},
                           {"mean_accuracy", cv.mean_accuracy},
                           {"best_hyper", hyper_json(f, cv.best)},
                           {"d_start", ds.back()},
                           {"d_end", de.back()}});
          if (c.save_models) {
            Classifier model = train(d, f, cv.best, c.seed, c.settings);
            nlohmann::json mj = to_json(model);
            mj["subject_id"] = d.subject_id;
            mj["task"] = tname;
            if (needs_value_function(set)) mj["value_function"] = vf_abs;
            const fs::path dir = c.out / "models" / d.subject_id;
            make_dir(dir);
            const fs::path file = dir / (tname + "_" + std::string(family_name(f)) + "_" +
                                         std::string(feature_set_name(set)) + ".json");
            save_json(file, mj);
            m.add_output(file);
          }
        }
        results.push_back({{"task", tname},
                           {"feature_set", std::string(feature_set_name(set))},
                           {"model", std::string(family_name(f))},
                           {"accuracy", mean(acc[f][set])},
                           {"accuracy_per_subject", acc[f][set]},
                           {"d_start", mean(ds)},
                           {"d_end", mean(de)},
                           {"folds", folds}});
      }
    }

    nlohmann::json comparisons = nlohmann::json::array();
    for (Family f : c.models) {
      for (FeatureSetId base : {FeatureSetId::Bd, FeatureSetId::B}) {
        if (!acc[f].count(base)) continue;
        for (FeatureSetId set : c.feature_sets) {
          if (set == base || set == FeatureSetId::B) continue;
          const auto& a = acc[f][set];
          const auto& b = acc[f][base];
          nlohmann::json cj = {{"model", std::string(family_name(f))},
                               {"pair", {std::string(feature_set_name(set)), std::string(feature_set_name(base))}},
                               {"mean_difference", mean(a) - mean(b)}};
          if (a.size() >= 3 && b.size() >= 3) {
            const MannWhitney mw = mann_whitney_u(a, b);
            cj["U"] = mw.u;
            cj["p"] = mw.p;
            cj["exact"] = mw.exact;
            cj["significant"] = mw.p < kSignificance;
          } else {
            cj["U"] = nullptr;
            cj["p"] = nullptr;
          }
          comparisons.push_back(cj);
        }
      }
    }

    const fs::path report = c.out / ("metrics_task_" + tname + ".json");
    save_json(report, {{"task", tname},
                       {"folds", c.folds},
                       {"seed", c.seed},
                       {"subjects", subject_ids},
                       {"results", results},
                       {"comparisons", comparisons}});
    m.add_output(report);
    summary.push_back({{"task", tname}, {"report", report.string()}});
  }
  m.write(c.out / "run_manifest.json");
  return {{"out", c.out.string()}, {"reports", summary}};
}

nlohmann::json cmd_shfrs(const ShfrsCommand& c) {
  try {
    c.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (c.model.empty()) throw UsageError("shfrs: --models must name a model file");
  if (c.data.empty() && !c.scene_seed) throw UsageError("shfrs: need --data or --seed");
  const Grid3 grid = parse_grid(c.grid);

  RunManifest m("shfrs");
  m.add_input(c.model);
  nlohmann::json mj;
  Classifier model;
  try {
    mj = load_json(c.model);
    model = classifier_from_json(mj);
  } catch (const std::exception& e) {
    throw UsageError(c.model.string() + ": " + e.what());
  }

  fs::path vf_path = c.vf;
  if (vf_path.empty() && mj.contains("value_function")) vf_path = mj.at("value_function").get<std::string>();
  std::optional<ValueFunction> vf;
  if (needs_value_function(layout_of(model))) {
    if (vf_path.empty()) throw UsageError("shfrs: model features need a value function (--vf)");
    vf = load_vf(vf_path);
    m.add_input(vf_path);
  }
  Predictor predictor;
  try {
    predictor = model_predictor(model, vf ? &*vf : nullptr);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<Trajectory> trajectories;
  Trajectory anchor_traj;
  if (!c.data.empty()) {
    try {
      trajectories = load_trajectories(c.data);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    m.add_input(c.data);
    if (c.traj < 0 || static_cast<std::size_t>(c.traj) >= trajectories.size())
      throw UsageError("shfrs: trajectory index out of range");
    anchor_traj = trajectories[c.traj];
  } else {
    const Scene scene = generate_scene(*c.scene_seed);
    const FeatureSetId layout = layout_of(model);
    const ValueFunction* vfp = vf ? &*vf : nullptr;
    anchor_traj = simulate_episode(scene, [&](const VehicleState& h, const VehicleState& r, int) {
      return action_omega(static_cast<Action>(predict(model, build_features(h, r, vfp, layout).values)));
    });
  }
  if (c.step < 0 || static_cast<std::size_t>(c.step) >= anchor_traj.size())
    throw UsageError("shfrs: anchor step out of range");

  std::vector<JointState> history;
  for (int i = 0; i <= c.step; ++i) history.push_back({anchor_traj.samples[i].human, anchor_traj.samples[i].robot});
  const BoundSchedule schedule = algorithm1_bounds(history, predictor, c.config, anchor_traj.robot_goal());
  const Shfrs s = build_shfrs(schedule, history.back().human, c.config, grid);

  m.config = {{"model", c.model.string()},
              {"vf", vf_path.string()},
              {"data", c.data.string()},
              {"traj", c.traj},
              {"step", c.step},
              {"grid", c.grid},
              {"estimate", c.estimate},
              {"max_trajectories", c.max_trajectories},
              {"shfrs", to_json(c.config)}};
  m.seeds = {{"scene_seed", c.scene_seed ? nlohmann::json(*c.scene_seed) : nlohmann::json(nullptr)}};
  make_dir(c.out);

  nlohmann::json files = nlohmann::json::array();
  for (std::size_t j = 0; j < s.tubes.size(); ++j) {
    const fs::path f = c.out / ("region_" + std::to_string(j + 1) + ".hjvf");
    save_value_function(f, s.tubes[j]);
    m.add_output(f);
    files.push_back(f.filename().string());
  }
  const RegionRaster raster = project_regions(s);
  const fs::path pgm = c.out / "projection.pgm";
  {
    std::ofstream os(pgm, std::ios::binary);
    os << to_pgm(raster);
  }
  m.add_output(pgm);

  nlohmann::json nesting = nlohmann::json::array();
  for (std::size_t j = 0; j < s.nesting.size(); ++j)
    nesting.push_back({{"inner", j + 1},
                       {"outer", j + 2},
                       {"ok", s.nesting[j].ok},
                       {"violations", s.nesting[j].violations},
                       {"offending", s.nesting[j].offending}});

  nlohmann::json out = {{"config", to_json(c.config)},
                        {"anchor", {{"x", s.anchor.px}, {"y", s.anchor.py}, {"psi", s.anchor.psi}}},
                        {"anchor_step", c.step},
                        {"schedule", to_json(s.schedule)},
                        {"nesting", nesting},
                        {"nested", s.nested},
                        {"region_sizes", s.region_sizes()},
                        {"region_files", files},
                        {"projection",
                         {{"file", pgm.filename().string()},
                          {"width", raster.width},
                          {"height", raster.height},
                          {"world_to_pixel", raster.world_to_pixel}}},
                        {"probabilities", nullptr}};

  bool monotone = true;
  if (c.estimate && !trajectories.empty()) {
    std::vector<Trajectory> sample = trajectories;
    if (c.max_trajectories > 0 && sample.size() > static_cast<std::size_t>(c.max_trajectories))
      sample.resize(static_cast<std::size_t>(c.max_trajectories));
    const ProbabilityEstimate est = estimate_probabilities(sample, predictor, c.config, grid);
    monotone = est.monotone;
    out["probabilities"] = to_json(est);
    const bool met = !est.p.empty() && est.p.front() >= c.config.p_floor;
    out["p_floor"] = c.config.p_floor;
    out["p_floor_met"] = met;
    out["suggested_epsilon_1"] = nullptr;
    if (!met) {
      // Smallest epsilon_1 on a 0.05 grid up to epsilon_2 that reaches the floor.
      const double upper = c.config.epsilons.size() > 1 ? c.config.epsilons[1] : 1.0;
      for (int q = 1; q * 0.05 <= upper + 1e-9; ++q) {
        ShfrsConfig one = c.config;
        one.epsilons = {q * 0.05};
        const ProbabilityEstimate e1 = estimate_probabilities(sample, predictor, one, grid);
        if (e1.p.front() >= c.config.p_floor) {
          out["suggested_epsilon_1"] = q * 0.05;
          break;
        }
      }
    }
  }

  const fs::path report = c.out / "shfrs.json";
  save_json(report, out);
  m.add_output(report);
  m.write(c.out / "run_manifest.json");
  if (!s.nested) throw VerificationError("shfrs: nesting check failed; see " + report.string());
  if (!monotone) throw VerificationError("shfrs: probabilities not monotone; see " + report.string());
  return {{"out", c.out.string()}, {"nested", s.nested}, {"probabilities", out["probabilities"]}};
}

nlohmann::json cmd_mip3(const Mip3Command& c) {
  if (c.mode != "verify" && c.mode != "simulate")
    throw UsageError("mip3: unknown mode '" + c.mode + "' (verify|simulate)");
  if (!(c.K > 0.0)) throw UsageError("mip3: K must be positive");
  RunManifest m("mip3");
  m.config = {{"mode", c.mode}, {"K", c.K}, {"vf", c.vf.string()}, {"grid", c.grid},
              {"radius", c.radius}, {"horizon", c.horizon}, {"dt", c.dt}};
  make_dir(c.out);

  if (c.mode == "verify") {
    const TheoremReport rep = verify_theorem(c.K, true);
    nlohmann::json j = to_json(rep);
    const MipSolution full = solve_mip(rcm_full());
    AvoidAssignment a21_31, a13_23;
    a21_31.ulo[1][0] = a21_31.ulo[2][0] = 1;
    a13_23.ulo[0][2] = a13_23.ulo[1][2] = 1;
    j["rcm_full"] = {{"optimum", to_json(full.assignment)},
                     {"objective", full.objective},
                     {"candidates",
                      {{{"assignment", a21_31.str()}, {"objective", objective(rcm_full(), a21_31)}},
                       {{"assignment", a13_23.str()}, {"objective", objective(rcm_full(), a13_23)}}}}};
    const fs::path report = c.out / "mip3_verify.json";
    save_json(report, j);
    m.add_output(report);
    m.write(c.out / "run_manifest.json");
    if (!rep.pass) throw VerificationError("mip3: theorem check failed; see " + report.string());
    return {{"out", report.string()}, {"pass", rep.pass}, {"cases", rep.patterns.size()}};
  }

  ValueFunction vf;
  if (!c.vf.empty()) {
    vf = load_vf(c.vf);
    m.add_input(c.vf);
  } else {
    vf = solve_or_throw(parse_grid(c.grid), {});
  }
  const auto [states, goals] = symmetric_scenario(c.radius);
  ThreeVehicleOptions o;
  o.K = c.K;
  o.horizon = c.horizon;
  o.dt = c.dt;
  o.capture_radius = vf.capture_radius;
  const ThreeVehicleResult r = simulate_three(states, goals, vf, o);
  const fs::path report = c.out / "mip3_simulate.json";
  save_json(report, to_json(r));
  m.add_output(report);
  m.write(c.out / "run_manifest.json");
  if (!r.safe)
    throw VerificationError("mip3: separation fell to " + std::to_string(r.min_separation) + "; see " +
                            report.string());
  return {{"out", report.string()}, {"safe", r.safe}, {"min_separation", r.min_separation}};
}

}  // namespace reachpred
