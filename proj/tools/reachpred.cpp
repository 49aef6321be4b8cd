#include <algorithm>
#include <cctype>
#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "reachpred/commands.hpp"
#include "reachpred/manifest.hpp"
#include "reachpred/service.hpp"
#include "reachpred/trajectory_io.hpp"

using namespace reachpred;

namespace {

// Every long flag also reads REACHPRED_<FLAG> (dashes become underscores).
void add_env_overrides(CLI::App& app) {
  for (CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help" ||
        opt->get_lnames().front() == "version")
      continue;
    std::string name = "REACHPRED_" + opt->get_lnames().front();
    for (char& ch : name) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    opt->envname(name);
  }
  for (CLI::App* sub : app.get_subcommands({})) add_env_overrides(*sub);
}

std::vector<int> broadcast_ks(std::vector<int> ks, int horizon) {
  if (ks.size() == 1) ks.assign(static_cast<std::size_t>(horizon), ks.front());
  return ks;
}

template <class T, class F>
std::vector<T> parse_list(const std::vector<std::string>& names, F parse) {
  std::vector<T> out;
  for (const auto& n : names) {
    try {
      out.push_back(parse(n));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

struct ShfrsFlags {
  std::vector<double> eps;
  std::vector<int> ks;
  int horizon = 10;
  double dt = 0.2;
  double p_floor = 0.75;
  bool slices = false;

  void add(CLI::App* app) {
    app->add_option("--eps", eps, "Bound widening per region, ascending")->delimiter(',');
    app->add_option("--ks", ks, "Top-k per step; one value applies to every step")->delimiter(',');
    app->add_option("--horizon", horizon, "Prediction steps")->check(CLI::PositiveNumber);
    app->add_option("--dt", dt, "Prediction step length (s)")->check(CLI::PositiveNumber);
    app->add_option("--p-floor", p_floor, "Reported target for region 1");
    app->add_flag("--slices", slices, "Check containment per step instead of over the tube");
  }

  ShfrsConfig config() const {
    ShfrsConfig c;
    c.horizon = horizon;
    c.dt = dt;
    if (!eps.empty()) c.epsilons = eps;
    c.ks = broadcast_ks(ks, horizon);
    c.p_floor = p_floor;
    c.slices = slices;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability-based human action prediction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  BrsCommand brs;
  auto* brs_app = app.add_subcommand("brs", "Solve the pairwise backward reachable tube");
  brs_app->add_option("--grid", brs.grid, "Grid preset or NXxNYxNT@HALFWIDTH");
  brs_app->add_option("--out", brs.out, "Output .hjvf file");
  brs_app->add_option("--max-iters", brs.options.max_iters);
  brs_app->add_option("--tol", brs.options.tol);

  GendataCommand gen;
  auto* gen_app = app.add_subcommand("gendata", "Generate synthetic subject trajectories");
  gen_app->add_option("--subjects", gen.subjects);
  gen_app->add_option("--scenes", gen.scenes);
  gen_app->add_option("--seed", gen.seed);
  gen_app->add_option("--out", gen.out, "Output directory");
  gen_app->add_option("--vf", gen.vf, "Existing value function; solved on --grid otherwise");
  gen_app->add_option("--grid", gen.grid);

  TrainEvalCommand te;
  std::vector<std::string> te_tasks, te_models, te_features;
  auto* te_app = app.add_subcommand("train-eval", "Cross-validated ablation over models and feature sets");
  te_app->add_option("--data", te.data, "gendata output directory");
  te_app->add_option("--task", te_tasks, "I, II or both")->delimiter(',');
  te_app->add_option("--models", te_models, "LR, DT, SVM")->delimiter(',');
  te_app->add_option("--features", te_features, "Feature sets, e.g. B,Bd,Bhrd")->delimiter(',');
  te_app->add_option("--folds", te.folds);
  te_app->add_option("--seed", te.seed);
  te_app->add_option("--out", te.out);
  bool te_no_models = false;
  te_app->add_flag("--no-save-models", te_no_models);

  ShfrsCommand sh;
  ShfrsFlags sh_flags;
  std::uint64_t sh_seed = 0;
  bool sh_no_estimate = false;
  auto* sh_app = app.add_subcommand("shfrs", "Build and export the set of nested forward reachable sets");
  sh_app->add_option("--models", sh.model, "Three-class model file");
  sh_app->add_option("--vf", sh.vf);
  sh_app->add_option("--data", sh.data, "Trajectory JSONL; also used for probability estimates");
  sh_app->add_option("--traj", sh.traj);
  sh_app->add_option("--step", sh.step);
  auto* sh_seed_opt = sh_app->add_option("--seed", sh_seed, "Scene seed for a closed-loop anchor");
  sh_app->add_option("--grid", sh.grid);
  sh_app->add_option("--out", sh.out);
  sh_app->add_option("--max-trajectories", sh.max_trajectories);
  sh_app->add_flag("--no-estimate", sh_no_estimate);
  sh_flags.add(sh_app);

  Mip3Command mip;
  auto* mip_app = app.add_subcommand("mip3", "Three-vehicle avoidance assignment");
  mip_app->add_option("mode", mip.mode, "verify or simulate");
  mip_app->add_option("--K", mip.K);
  mip_app->add_option("--vf", mip.vf);
  mip_app->add_option("--grid", mip.grid);
  mip_app->add_option("--radius", mip.radius);
  mip_app->add_option("--horizon", mip.horizon);
  mip_app->add_option("--dt", mip.dt);
  mip_app->add_option("--out", mip.out);

  ServiceConfig sc;
  ShfrsFlags sv_flags;
  auto* sv_app = app.add_subcommand("serve", "Run the session HTTP service");
  sv_app->add_option("--port", sc.port);
  sv_app->add_option("--host", sc.host);
  sv_app->add_option("--data", sc.data_dir, "Session and trajectory store directory");
  sv_app->add_option("--models", sc.models_dir, "Directory scanned for model files");
  sv_app->add_option("--default-model", sc.default_model);
  sv_app->add_option("--grid", sc.grid);
  sv_app->add_option("--vf", sc.vf);
  sv_flags.add(sv_app);

  add_env_overrides(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    nlohmann::json summary;
    if (*brs_app) {
      summary = cmd_brs(brs);
    } else if (*gen_app) {
      summary = cmd_gendata(gen);
    } else if (*te_app) {
      if (!te_tasks.empty()) te.tasks = parse_list<Task>(te_tasks, parse_task);
      if (!te_models.empty()) te.models = parse_list<Family>(te_models, parse_family);
      if (!te_features.empty()) te.feature_sets = parse_list<FeatureSetId>(te_features, parse_feature_set);
      te.save_models = !te_no_models;
      summary = cmd_train_eval(te);
    } else if (*sh_app) {
      sh.config = sh_flags.config();
      if (sh_seed_opt->count() > 0) sh.scene_seed = sh_seed;
      sh.estimate = !sh_no_estimate;
      summary = cmd_shfrs(sh);
    } else if (*mip_app) {
      summary = cmd_mip3(mip);
    } else if (*sv_app) {
      sc.shfrs = sv_flags.config();
      SessionManager mgr(sc);
      HttpService http(mgr);
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      const int port = http.start(sc.host, sc.port);
      std::cerr << "listening on " << sc.host << ":" << port << "\n";
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      http.stop();
      return kExitOk;
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "reachpred: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    std::cerr << "reachpred: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "reachpred: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "reachpred: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const VerificationError& e) {
    std::cerr << "reachpred: verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const std::exception& e) {
    std::cerr << "reachpred: error: " << e.what() << "\n";
    return 1;
  }
}
