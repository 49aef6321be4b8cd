#include "reachpred/shfrs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "reachpred/codec.hpp"
#include "reachpred/features.hpp"

namespace reachpred {

std::vector<int> default_ks(int horizon) {
  std::vector<int> ks(static_cast<std::size_t>(std::max(horizon, 0)), 1);
  for (int i = 0; i < std::min(horizon, 2); ++i) ks[i] = 2;
  return ks;
}

int ShfrsConfig::k_at(int step) const {
  if (ks.empty()) return step < 2 ? 2 : 1;
  return ks.at(static_cast<std::size_t>(step));
}

void ShfrsConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("shfrs: horizon must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("shfrs: dt must be positive");
  if (epsilons.empty() || epsilons.size() > 255)
    throw std::invalid_argument("shfrs: need between 1 and 255 epsilons");
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    if (!(epsilons[j] >= 0.0) || !std::isfinite(epsilons[j]))
      throw std::invalid_argument("shfrs: epsilons must be finite and non-negative");
    if (j > 0 && epsilons[j] < epsilons[j - 1])
      throw std::invalid_argument("shfrs: epsilons must be non-decreasing");
  }
  if (!ks.empty() && ks.size() != static_cast<std::size_t>(horizon))
    throw std::invalid_argument("shfrs: need one k per prediction step (" + std::to_string(horizon) + ")");
  for (int k : ks)
    if (k < 1 || k > 3) throw std::invalid_argument("shfrs: every k must be 1, 2 or 3");
  if (!(p_floor >= 0.0 && p_floor <= 1.0)) throw std::invalid_argument("shfrs: p_floor must lie in [0, 1]");
}

Predictor model_predictor(const Classifier& model, const ValueFunction* vf) {
  if (classes_of(model) != 3)
    throw std::invalid_argument("predictor needs a three-class model (task I)");
  const FeatureSetId layout = layout_of(model);
  if (needs_value_function(layout) && !vf)
    throw std::invalid_argument(std::string("feature set ") + std::string(feature_set_name(layout)) +
                                " needs a value function");
  auto m = std::make_shared<const Classifier>(model);
  return [m, vf, layout](std::span<const JointState> history) {
    const JointState& s = history.back();
    const auto p = predict_proba(*m, build_features(s.human, s.robot, vf, layout));
    return ActionProbs{p[0], p[1], p[2]};
  };
}

std::vector<Action> top_k(const ActionProbs& p, int k) {
  if (k < 1 || k > 3) throw std::invalid_argument("top_k: k must be 1, 2 or 3");
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] > p[b]; });
  std::vector<Action> out;
  for (int i = 0; i < k; ++i) out.push_back(static_cast<Action>(order[i]));
  return out;
}

TubeSchedule BoundSchedule::tube(int region) const {
  TubeSchedule s;
  for (const auto& b : bounds.at(static_cast<std::size_t>(region))) s.push_back({dt, b});
  return s;
}

void BoundSchedule::check_nested() const {
  for (std::size_t j = 1; j < bounds.size(); ++j)
    for (std::size_t i = 0; i < bounds[j].size(); ++i)
      if (bounds[j][i].lo > bounds[j - 1][i].lo || bounds[j][i].hi < bounds[j - 1][i].hi)
        throw std::invalid_argument("bound schedule not nested at region " + std::to_string(j + 1) + ", step " +
                                    std::to_string(i));
}

namespace {

ActionProbs checked(const ActionProbs& p) {
  for (double q : p)
    if (!(q >= 0.0) || !std::isfinite(q)) throw std::runtime_error("predictor returned an invalid distribution");
  return p;
}

}  // namespace

BoundSchedule algorithm1_bounds(std::span<const JointState> history, const Predictor& predictor,
                                const ShfrsConfig& config, Point2 robot_goal, const DubinsParams& params) {
  config.validate();
  if (history.empty()) throw std::invalid_argument("algorithm1_bounds: empty history");
  const int T = config.horizon;
  const int F = config.regions();

  BoundSchedule out;
  out.dt = config.dt;
  out.bounds.assign(F, std::vector<BoundedInterval>(T));

  std::vector<JointState> low(history.begin(), history.end());
  std::vector<JointState> high = low;
  VehicleState robot = history.back().robot;
  VehicleState h_low = history.back().human, h_high = h_low;

  for (int i = 0; i < T; ++i) {
    const int k = config.k_at(i);
    double lo = params.omega_max, hi = params.omega_min;
    for (const auto* hist : {&low, &high}) {
      for (Action a : top_k(checked(predictor(*hist)), k)) {
        lo = std::min(lo, action_omega(a));
        hi = std::max(hi, action_omega(a));
      }
    }
    for (int j = 0; j < F; ++j) {
      const double e = config.epsilons[j];
      out.bounds[j][i] = {std::max(lo - e, params.omega_min), std::min(hi + e, params.omega_max)};
    }

    robot = step_vehicle(robot, {robot_policy(robot, robot_goal, params)}, config.dt, params);
    h_low = step_vehicle(h_low, {out.bounds[0][i].lo}, config.dt, params);
    h_high = step_vehicle(h_high, {out.bounds[0][i].hi}, config.dt, params);
    low.push_back({h_low, robot});
    high.push_back({h_high, robot});
  }
  return out;
}

VehicleState to_anchor_frame(const VehicleState& anchor, const VehicleState& s) {
  const double dx = s.px - anchor.px, dy = s.py - anchor.py;
  const double c = std::cos(anchor.psi), sn = std::sin(anchor.psi);
  return {c * dx + sn * dy, -sn * dx + c * dy, wrap_angle(s.psi - anchor.psi)};
}

std::vector<std::size_t> Shfrs::region_sizes() const {
  std::vector<std::size_t> n(tubes.size() + 1, 0);
  for (auto r : region) ++n[r];
  return n;
}

int Shfrs::region_of(const VehicleState& world) const {
  const VehicleState c = to_anchor_frame(anchor, world);
  for (std::size_t j = 0; j < tubes.size(); ++j)
    if (contains_state(tubes[j], c)) return static_cast<int>(j) + 1;
  return 0;
}

std::optional<ValueFunction> TubeCache::get(const Grid3& grid, const TubeSchedule& s) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(s);
  if (it == entries_.end() || !(it->second.second.grid == grid)) return std::nullopt;
  it->second.first = ++tick_;
  return it->second.second;
}

void TubeCache::put(const TubeSchedule& s, const ValueFunction& vf) {
  std::lock_guard lock(mu_);
  entries_[s] = {++tick_, vf};
  while (entries_.size() > capacity_) {
    auto oldest = entries_.begin();
    for (auto it = entries_.begin(); it != entries_.end(); ++it)
      if (it->second.first < oldest->second.first) oldest = it;
    entries_.erase(oldest);
  }
}

Shfrs build_shfrs(const BoundSchedule& schedule, const VehicleState& human_now, const ShfrsConfig& config,
                  const Grid3& grid, const DubinsParams& params, bool strict, TubeCache* cache) {
  config.validate();
  if (schedule.regions() != config.regions() || schedule.steps() != config.horizon)
    throw std::invalid_argument("build_shfrs: schedule shape does not match the configuration");
  schedule.check_nested();

  Shfrs s;
  s.config = config;
  s.schedule = schedule;
  s.anchor = human_now;
  // Dubins motion is invariant under rigid motions, so the sets are solved
  // with the human at the origin facing +x.
  std::map<TubeSchedule, std::size_t> solved;
  for (int j = 0; j < schedule.regions(); ++j) {
    const TubeSchedule ts = schedule.tube(j);
    auto it = solved.find(ts);
    if (it != solved.end()) {
      s.tubes.push_back(s.tubes[it->second]);
    } else {
      std::optional<ValueFunction> hit = cache ? cache->get(grid, ts) : std::nullopt;
      if (hit) {
        s.tubes.push_back(std::move(*hit));
      } else {
        s.tubes.push_back(solve_frs(grid, {0.0, 0.0, 0.0}, ts, params, config.frs));
        if (cache) cache->put(ts, s.tubes.back());
      }
      solved.emplace(ts, s.tubes.size() - 1);
    }
  }

  s.region.assign(grid.size(), 0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    for (std::size_t j = 0; j < s.tubes.size(); ++j) {
      if (s.tubes[j].values[n] <= 0.0) {
        s.region[n] = static_cast<std::uint8_t>(j + 1);
        break;
      }
    }
  }

  for (std::size_t j = 0; j + 1 < s.tubes.size(); ++j) {
    s.nesting.push_back(subset_report(s.tubes[j], s.tubes[j + 1], grid.cell()));
    s.nested = s.nested && s.nesting.back().ok;
  }
  if (strict && !s.nested) {
    std::ostringstream msg;
    msg << "nesting check failed:";
    for (std::size_t j = 0; j < s.nesting.size(); ++j)
      if (!s.nesting[j].ok) msg << " F" << j + 1 << " not in F" << j + 2 << " at " << s.nesting[j].violations << " nodes;";
    throw NestingError(msg.str(), s.nesting);
  }
  return s;
}

namespace {

bool on_grid(const Grid3& g, const VehicleState& s) {
  return s.px >= g.mins[0] && s.px <= g.maxs[0] && s.py >= g.mins[1] && s.py <= g.maxs[1];
}

struct Window {
  BoundSchedule bounds;
  std::vector<VehicleState> states;  // anchor frame
  bool all_on_grid = true;
};

}  // namespace

ProbabilityEstimate estimate_probabilities(const std::vector<Trajectory>& trajectories, const Predictor& predictor,
                                           const ShfrsConfig& config, const Grid3& grid,
                                           const DubinsParams& params) {
  config.validate();
  grid.validate();
  const int T = config.horizon;
  const int F = config.regions();

  ProbabilityEstimate est;
  std::vector<Window> windows;
  for (const auto& tr : trajectories) {
    if (tr.size() < static_cast<std::size_t>(T + 1)) {
      ++est.skipped_trajectories;
      continue;
    }
    std::vector<JointState> hist;
    for (const auto& s : tr.samples) hist.push_back({s.human, s.robot});
    const Point2 goal = tr.robot_goal();
    for (std::size_t l = 0; l + T < tr.size(); ++l) {
      Window w;
      w.bounds = algorithm1_bounds(std::span<const JointState>(hist.data(), l + 1), predictor, config, goal, params);
      for (int m = 0; m <= T; ++m) {
        w.states.push_back(to_anchor_frame(hist[l].human, hist[l + m].human));
        ++est.states_checked;
        if (!on_grid(grid, w.states.back())) {
          ++est.states_off_grid;
          w.all_on_grid = false;
        }
      }
      windows.push_back(std::move(w));
    }
  }
  est.anchors = windows.size();
  for (const auto& w : windows) est.anchors_on_grid += w.all_on_grid;

  // Many windows share a schedule; solve each distinct one once.
  std::map<TubeSchedule, std::vector<std::pair<std::size_t, int>>> groups;
  for (std::size_t a = 0; a < windows.size(); ++a)
    for (int j = 0; j < F; ++j) groups[windows[a].bounds.tube(j)].push_back({a, j});
  est.unique_tubes = groups.size();

  est.contained.assign(F, 0);
  std::vector<std::size_t> contained_on_grid(F, 0);
  for (const auto& [ts, members] : groups) {
    std::vector<ValueFunction> sets;
    if (config.slices)
      sets = solve_frs_slices(grid, {0.0, 0.0, 0.0}, ts, params, config.frs);
    else
      sets.push_back(solve_frs(grid, {0.0, 0.0, 0.0}, ts, params, config.frs));
    for (const auto& [a, j] : members) {
      const Window& w = windows[a];
      bool inside = true;
      for (std::size_t m = 0; m < w.states.size() && inside; ++m)
        inside = contains_state(config.slices ? sets[m] : sets[0], w.states[m]);
      if (inside) {
        ++est.contained[j];
        if (w.all_on_grid) ++contained_on_grid[j];
      }
    }
  }

  for (int j = 0; j < F; ++j) {
    est.p.push_back(est.anchors ? static_cast<double>(est.contained[j]) / static_cast<double>(est.anchors) : 0.0);
    est.p_on_grid.push_back(est.anchors_on_grid ? static_cast<double>(contained_on_grid[j]) /
                                                      static_cast<double>(est.anchors_on_grid)
                                                : 0.0);
    if (j > 0 && est.p[j] < est.p[j - 1]) est.monotone = false;
  }
  return est;
}

RegionRaster project_regions(const Shfrs& s) {
  if (s.tubes.empty()) throw std::invalid_argument("project_regions: no regions");
  const Grid3& g = s.tubes.front().grid;
  const double hx = g.spacing(0), hy = g.spacing(1);
  RegionRaster r;
  r.width = g.dims[0];
  r.height = g.dims[1];
  r.pixels.assign(r.width * r.height, 0);
  const double x0 = s.anchor.px + g.mins[0];
  const double ytop = s.anchor.py + g.maxs[1];
  r.world_to_pixel = {1.0 / hx, 0.0, -x0 / hx, 0.0, -1.0 / hy, ytop / hy};

  for (std::size_t row = 0; row < r.height; ++row) {
    for (std::size_t col = 0; col < r.width; ++col) {
      const VehicleState world{x0 + col * hx, ytop - row * hy, 0.0};
      const VehicleState c = to_anchor_frame(s.anchor, world);
      if (c.px < g.mins[0] || c.px > g.maxs[0] || c.py < g.mins[1] || c.py > g.maxs[1]) continue;
      for (std::size_t j = 0; j < s.tubes.size(); ++j) {
        bool hit = false;
        for (std::size_t k = 0; k < g.dims[2] && !hit; ++k)
          hit = value_at(s.tubes[j], c.px, c.py, g.coord(2, k)).value <= 0.0;
        if (hit) {
          r.pixels[row * r.width + col] = static_cast<std::uint8_t>(j + 1);
          break;
        }
      }
    }
  }
  return r;
}

std::string to_pgm(const RegionRaster& r) {
  std::string out = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(r.pixels.data()), r.pixels.size());
  return out;
}

nlohmann::json raster_json(const RegionRaster& r) {
  return {{"width", r.width},
          {"height", r.height},
          {"format", "pgm"},
          {"pgm_base64", base64_encode(to_pgm(r))},
          {"world_to_pixel", r.world_to_pixel},
          {"pixel_origin", "center"}};
}

nlohmann::json to_json(const ShfrsConfig& c) {
  return {{"horizon", c.horizon},
          {"dt", c.dt},
          {"epsilons", c.epsilons},
          {"ks", c.ks.empty() ? default_ks(c.horizon) : c.ks},
          {"p_floor", c.p_floor},
          {"membership", c.slices ? "slices" : "tube"},
          {"frs",
           {{"initial_radius_cells", c.frs.initial_radius_cells},
            {"max_step", c.frs.max_step},
            {"tube_samples", c.frs.tube_samples},
            {"control_lattice", c.frs.control_lattice}}}};
}

ShfrsConfig shfrs_config_from_json(const nlohmann::json& j) {
  ShfrsConfig c;
  c.horizon = j.value("horizon", c.horizon);
  c.dt = j.value("dt", c.dt);
  c.epsilons = j.value("epsilons", c.epsilons);
  c.ks = j.value("ks", c.ks);
  c.p_floor = j.value("p_floor", c.p_floor);
  c.slices = j.value("membership", std::string("tube")) == "slices";
  if (j.contains("frs")) {
    const auto& f = j.at("frs");
    c.frs.initial_radius_cells = f.value("initial_radius_cells", c.frs.initial_radius_cells);
    c.frs.max_step = f.value("max_step", c.frs.max_step);
    c.frs.tube_samples = f.value("tube_samples", c.frs.tube_samples);
    c.frs.control_lattice = f.value("control_lattice", c.frs.control_lattice);
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const BoundSchedule& s) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& row : s.bounds) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& b : row) r.push_back({b.lo, b.hi});
    regions.push_back(r);
  }
  return {{"dt", s.dt}, {"bounds", regions}};
}

nlohmann::json to_json(const ProbabilityEstimate& e) {
  return {{"p", e.p},
          {"p_on_grid", e.p_on_grid},
          {"contained", e.contained},
          {"anchors", e.anchors},
          {"anchors_on_grid", e.anchors_on_grid},
          {"states_checked", e.states_checked},
          {"states_off_grid", e.states_off_grid},
          {"off_grid_fraction", e.off_grid_fraction()},
          {"skipped_trajectories", e.skipped_trajectories},
          {"unique_tubes", e.unique_tubes},
          {"monotone", e.monotone}};
}

}  // namespace reachpred
