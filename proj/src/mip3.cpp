#include "reachpred/mip3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace reachpred {

void SafetyTriple::validate() const {
  if (!(K > 0.0)) throw std::invalid_argument("activity threshold K must be positive");
}

bool AvoidAssignment::feasible() const {
  for (int i = 0; i < 3; ++i) {
    if (ulo[i][i]) return false;
    if (ulo[i][0] + ulo[i][1] + ulo[i][2] > 1) return false;
    for (int j = 0; j < 3; ++j)
      if (i != j && ulo[i][j] && ulo[j][i]) return false;
  }
  return true;
}

std::string AvoidAssignment::str() const {
  std::string s = "{";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (ulo[i][j]) {
        if (s.size() > 1) s += ",";
        s += std::to_string(i + 1) + std::to_string(j + 1);
      }
  return s + "}";
}

bool cycle_pair_active(const SafetyTriple& s, int pair) {
  const auto [i, j] = kPairOrder.at(static_cast<std::size_t>(pair));
  return s.sv[i][j] >= 0.0 && s.sv[i][j] <= s.K;
}

RewardMatrix build_rcm(const SafetyTriple& s) {
  s.validate();
  std::vector<int> rank;
  for (int c = 0; c < 3; ++c)
    if (cycle_pair_active(s, c)) rank.push_back(c);
  for (int c = 0; c < 3; ++c)
    if (!cycle_pair_active(s, c)) rank.push_back(c);
  for (int c = 3; c < 6; ++c) rank.push_back(c);

  RewardMatrix r;
  for (std::size_t n = 0; n < rank.size(); ++n) {
    const auto [i, j] = kPairOrder[rank[n]];
    r.rcm[i][j] = s.sv[i][j] < 0.0 ? -1.0 : kPairWeights[n];
  }
  return r;
}

RewardMatrix rcm_full() {
  RewardMatrix r;
  for (std::size_t n = 0; n < kPairOrder.size(); ++n) r.rcm[kPairOrder[n][0]][kPairOrder[n][1]] = kPairWeights[n];
  return r;
}

std::vector<AvoidAssignment> enumerate_feasible() {
  // Bit 5 is entry (1,2), bit 0 is (3,2): increasing masks are lexicographic.
  static constexpr std::array<std::array<int, 2>, 6> cells{{{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}}};
  std::vector<AvoidAssignment> out;
  for (int mask = 0; mask < 64; ++mask) {
    AvoidAssignment a;
    for (int b = 0; b < 6; ++b)
      if (mask & (1 << (5 - b))) a.ulo[cells[b][0]][cells[b][1]] = 1;
    if (a.feasible()) out.push_back(a);
  }
  return out;
}

double objective(const RewardMatrix& r, const AvoidAssignment& a) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (a.ulo[i][j]) s += r.rcm[i][j];
  return s;
}

MipSolution solve_mip(const RewardMatrix& r) {
  MipSolution best;
  bool first = true;
  for (const auto& a : enumerate_feasible()) {
    const double v = objective(r, a);
    if (first || v > best.objective) {
      best = {a, v};
      first = false;
    }
  }
  return best;
}

std::vector<DominanceStep> check_dominance(const RewardMatrix& r, const std::vector<std::array<int, 2>>& active) {
  const auto all = enumerate_feasible();
  AvoidAssignment fixed;
  std::vector<DominanceStep> steps;
  for (const auto& [i, j] : active) {
    DominanceStep st{i, j, r.rcm[i][j], std::nullopt, std::nullopt, true};
    for (const auto& a : all) {
      bool keeps = true;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          if (fixed.ulo[p][q] && !a.ulo[p][q]) keeps = false;
      if (!keeps || a.ulo[i][j]) continue;
      bool conflicts = a.ulo[j][i] != 0;
      for (int q = 0; q < 3; ++q)
        if (q != j && a.ulo[i][q]) conflicts = true;
      if (!conflicts) continue;
      double rest = 0.0;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          if (a.ulo[p][q] && !fixed.ulo[p][q]) rest += r.rcm[p][q];
      if (!st.rival || rest > *st.rival) {
        st.rival = rest;
        st.rival_assignment = a;
      }
    }
    fixed.ulo[i][j] = 1;
    st.ok = fixed.feasible() && (!st.rival || st.weight > *st.rival);
    steps.push_back(st);
  }
  return steps;
}

TheoremReport verify_theorem(double K, bool sweep_reverse) {
  if (!(K > 0.0)) throw std::invalid_argument("activity threshold K must be positive");
  const double inside = 0.5 * K, above = 2.0 * K;
  std::vector<std::array<double, 3>> reverse_states{{above, above, above}};
  if (sweep_reverse) {
    reverse_states.clear();
    const double vals[3] = {-1.0, inside, above};
    for (double a : vals)
      for (double b : vals)
        for (double c : vals) reverse_states.push_back({a, b, c});
  }

  TheoremReport rep;
  rep.K = K;
  for (int pattern = 0; pattern < 8; ++pattern) {
    for (const auto& rev : reverse_states) {
      PatternResult pr;
      SafetyTriple s;
      s.K = K;
      for (int c = 0; c < 3; ++c) {
        pr.active[c] = (pattern >> c) & 1;
        s.sv[kPairOrder[c][0]][kPairOrder[c][1]] = pr.active[c] ? inside : above;
        s.sv[kPairOrder[c + 3][0]][kPairOrder[c + 3][1]] = rev[c];
      }
      pr.sv = s.sv;
      pr.rcm = build_rcm(s);
      pr.optimum = solve_mip(pr.rcm);
      std::vector<std::array<int, 2>> active;
      for (int c = 0; c < 3; ++c)
        if (pr.active[c]) active.push_back(kPairOrder[c]);
      pr.dominance = check_dominance(pr.rcm, active);
      pr.pass = true;
      for (const auto& [i, j] : active)
        if (!pr.optimum.assignment.ulo[i][j]) pr.pass = false;
      if (!pr.pass) pr.counterexample = pr.optimum.assignment;
      for (const auto& d : pr.dominance) pr.pass = pr.pass && d.ok;
      rep.pass = rep.pass && pr.pass;
      rep.patterns.push_back(pr);
    }
  }
  return rep;
}

double avoidance_control(const ValueFunction& vf, const VehicleState& self, const VehicleState& other) {
  const RelativeState x = relative_state(other, self);
  const auto g = gradient_at(vf, x.xr, x.yr, x.thetar);
  const double s = g[0] * x.yr - g[1] * x.xr - g[2];
  if (s > 0.0) return vf.params.omega_max;
  if (s < 0.0) return vf.params.omega_min;
  return 0.0;
}

namespace {

double separation(const VehicleState& a, const VehicleState& b) { return std::hypot(a.px - b.px, a.py - b.py); }

}  // namespace

ThreeVehicleResult simulate_three(const std::array<VehicleState, 3>& initial, const std::array<Point2, 3>& goals,
                                  const ValueFunction& vf, const ThreeVehicleOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.horizon > 0.0)) throw std::invalid_argument("simulate_three: bad time settings");
  if (!(opts.K > 0.0)) throw std::invalid_argument("activity threshold K must be positive");
  const DubinsParams& params = vf.params;
  const int steps = static_cast<int>(std::llround(opts.horizon / opts.dt));

  ThreeVehicleResult res;
  res.steps = steps;
  res.min_separation = std::numeric_limits<double>::infinity();
  auto states = initial;

  for (int n = 0; n <= steps; ++n) {
    ThreeVehicleStep st;
    st.t = n * opts.dt;
    st.states = states;
    st.min_separation = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const double d = separation(states[i], states[j]);
        st.min_separation = std::min(st.min_separation, d);
        if (d < res.min_separation) {
          res.min_separation = d;
          res.min_separation_time = st.t;
          res.min_pair = {i, j};
        }
      }

    SafetyTriple s;
    s.K = opts.K;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) s.sv[i][j] = value_at(vf, relative_state(states[j], states[i])).value;
    st.sv = s.sv;
    st.ulo = solve_mip(build_rcm(s)).assignment;

    for (int i = 0; i < 3; ++i) {
      st.omega[i] = robot_policy(states[i], goals[i], params).omega;
      for (int j = 0; j < 3; ++j) {
        if (st.ulo.ulo[i][j] && s.sv[i][j] <= opts.K) {
          st.omega[i] = avoidance_control(vf, states[i], states[j]);
          ++res.activations;
        }
      }
    }
    if (n % std::max(opts.log_every, 1) == 0 || n == steps) res.log.push_back(st);
    if (n == steps) break;
    for (int i = 0; i < 3; ++i) states[i] = step_vehicle(states[i], {st.omega[i]}, opts.dt, params);
  }
  res.safe = res.min_separation >= opts.capture_radius;
  return res;
}

std::pair<std::array<VehicleState, 3>, std::array<Point2, 3>> symmetric_scenario(double radius) {
  std::array<VehicleState, 3> states;
  std::array<Point2, 3> goals;
  for (int i = 0; i < 3; ++i) {
    const double a = kPi / 2.0 + i * 2.0 * kPi / 3.0;
    states[i] = {radius * std::cos(a), radius * std::sin(a), wrap_angle(a + kPi)};
    goals[i] = {-radius * std::cos(a), -radius * std::sin(a)};
  }
  return {states, goals};
}

nlohmann::json to_json(const AvoidAssignment& a) {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& row : a.ulo) m.push_back({row[0], row[1], row[2]});
  return {{"ulo", m}, {"pairs", a.str()}};
}

namespace {

nlohmann::json matrix_json(const Matrix3& m) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : m) j.push_back({row[0], row[1], row[2]});
  return j;
}

}  // namespace

nlohmann::json to_json(const TheoremReport& r) {
  nlohmann::json patterns = nlohmann::json::array();
  for (const auto& p : r.patterns) {
    nlohmann::json dom = nlohmann::json::array();
    for (const auto& d : p.dominance) {
      dom.push_back({{"pair", std::to_string(d.i + 1) + std::to_string(d.j + 1)},
                     {"weight", d.weight},
                     {"rival", d.rival ? nlohmann::json(*d.rival) : nlohmann::json(nullptr)},
                     {"rival_assignment", d.rival_assignment ? nlohmann::json(d.rival_assignment->str())
                                                             : nlohmann::json(nullptr)},
                     {"ok", d.ok}});
    }
    nlohmann::json pj = {{"active", {{"12", p.active[0]}, {"23", p.active[1]}, {"31", p.active[2]}}},
                         {"sv", matrix_json(p.sv)},
                         {"rcm", matrix_json(p.rcm.rcm)},
                         {"optimum", to_json(p.optimum.assignment)},
                         {"objective", p.optimum.objective},
                         {"dominance", dom},
                         {"pass", p.pass}};
    if (p.counterexample) pj["counterexample"] = to_json(*p.counterexample);
    patterns.push_back(pj);
  }
  return {{"K", r.K}, {"feasible_count", enumerate_feasible().size()}, {"patterns", patterns}, {"pass", r.pass}};
}

nlohmann::json to_json(const ThreeVehicleResult& r) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& s : r.log) {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& v : s.states) st.push_back({v.px, v.py, v.psi});
    log.push_back({{"t", s.t},
                   {"states", st},
                   {"sv", matrix_json(s.sv)},
                   {"ulo", s.ulo.str()},
                   {"omega", s.omega},
                   {"min_separation", s.min_separation}});
  }
  return {{"min_separation", r.min_separation},
          {"min_separation_time", r.min_separation_time},
          {"min_pair", std::to_string(r.min_pair[0] + 1) + std::to_string(r.min_pair[1] + 1)},
          {"steps", r.steps},
          {"activations", r.activations},
          {"safe", r.safe},
          {"log", log}};
}

}  // namespace reachpred
