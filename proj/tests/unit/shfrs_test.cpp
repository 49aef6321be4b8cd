#include <chrono>
#include <cmath>

#include "doctest.h"
#include "reachpred/shfrs.hpp"
#include "support.hpp"

using namespace reachpred;
using doctest::Approx;

namespace {

Predictor constant(ActionProbs p) {
  return [p](std::span<const JointState>) { return p; };
}

std::vector<JointState> history_at(const VehicleState& h) { return {JointState{h, {10.0, 10.0, kPi}}}; }

ShfrsConfig config_with(std::vector<double> eps, int k) {
  ShfrsConfig c;
  c.epsilons = std::move(eps);
  c.ks.assign(static_cast<std::size_t>(c.horizon), k);
  return c;
}

}  // namespace

TEST_CASE("configuration") {
  ShfrsConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.regions() == 5);
  CHECK(c.k_at(0) == 2);
  CHECK(c.k_at(1) == 2);
  CHECK(c.k_at(2) == 1);
  CHECK(c.k_at(9) == 1);
  c.epsilons = {0.0, 0.3, 0.2};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.ks = {2, 2};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.ks.assign(10, 4);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = config_with({0.0, 0.5, 1.0}, 3);
  c.slices = true;
  c.p_floor = 0.6;
  const auto back = shfrs_config_from_json(to_json(c));
  CHECK(back.epsilons == c.epsilons);
  CHECK(back.ks == c.ks);
  CHECK(back.slices);
  CHECK(back.p_floor == 0.6);
  CHECK(back.horizon == c.horizon);
}

TEST_CASE("top_k order and ties") {
  CHECK(top_k({0.6, 0.3, 0.1}, 2) == std::vector<Action>{Action::left, Action::straight});
  CHECK(top_k({0.1, 0.3, 0.6}, 1) == std::vector<Action>{Action::right});
  CHECK(top_k({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2) == std::vector<Action>{Action::left, Action::straight});
  CHECK(top_k({0.2, 0.4, 0.4}, 1) == std::vector<Action>{Action::straight});
  CHECK_THROWS(top_k({1, 0, 0}, 0));
}

TEST_CASE("Algorithm 1 bounds") {
  const auto hist = history_at({0, 0, 0});
  SUBCASE("certain straight prediction") {
    const auto s = algorithm1_bounds(hist, constant({0, 1, 0}), config_with({0.0, 1.0}, 1), {0, 0});
    REQUIRE(s.regions() == 2);
    REQUIRE(s.steps() == 10);
    for (const auto& b : s.bounds[0]) CHECK(b == BoundedInterval{0.0, 0.0});
  }
  SUBCASE("top two at the first step") {
    const auto s = algorithm1_bounds(hist, constant({0.6, 0.3, 0.1}), config_with({0.0, 1.0}, 2), {0, 0});
    CHECK(s.bounds[0][0] == BoundedInterval{0.0, 0.5});
  }
  SUBCASE("widening") {
    const auto s = algorithm1_bounds(hist, constant({0, 1, 0}), config_with({0.0, 0.15, 1.0}, 1), {0, 0});
    for (const auto& b : s.bounds[1]) CHECK(b == BoundedInterval{-0.15, 0.15});
    for (const auto& b : s.bounds[2]) CHECK(b == BoundedInterval{-0.5, 0.5});
    CHECK_NOTHROW(s.check_nested());
    const auto tube = s.tube(1);
    REQUIRE(tube.size() == 10);
    CHECK(tube[3].duration == Approx(0.2));
    CHECK(tube[3].bounds == BoundedInterval{-0.15, 0.15});
  }
  SUBCASE("default config clamps the last region") {
    const auto s = algorithm1_bounds(hist, constant({0.2, 0.5, 0.3}), ShfrsConfig{}, {5, 5});
    for (const auto& b : s.bounds.back()) CHECK(b == BoundedInterval{-0.5, 0.5});
    CHECK_NOTHROW(s.check_nested());
  }
  SUBCASE("history-dependent predictor sees the rollout") {
    std::size_t longest = 0;
    Predictor p = [&](std::span<const JointState> h) {
      longest = std::max(longest, h.size());
      return ActionProbs{0.2, 0.5, 0.3};
    };
    algorithm1_bounds(hist, p, ShfrsConfig{}, {5, 5});
    CHECK(longest == hist.size() + 9);
  }
  BoundSchedule broken;
  broken.bounds = {{{-0.5, 0.5}}, {{0.0, 0.0}}};
  CHECK_THROWS(broken.check_nested());
  CHECK_THROWS(algorithm1_bounds({}, constant({0, 1, 0}), ShfrsConfig{}, {0, 0}));
}

TEST_CASE("anchor frame") {
  const VehicleState a{3, -2, 0.7};
  const auto z = to_anchor_frame(a, a);
  CHECK(z.px == Approx(0.0));
  CHECK(z.py == Approx(0.0));
  CHECK(z.psi == Approx(0.0));
  const auto ahead = to_anchor_frame(a, step_vehicle(a, {0.0}, 1.0));
  CHECK(ahead.px == Approx(2.0));
  CHECK(ahead.py == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("SHFRS construction") {
  const Grid3 grid = grid_preset("frs");
  const VehicleState now{3, -2, 0.7};

  SUBCASE("default regions are nested and disjoint") {
    const ShfrsConfig cfg;
    const auto s = algorithm1_bounds(history_at(now), constant({0.5, 0.3, 0.2}), cfg, {0, 0});
    const auto sh = build_shfrs(s, now, cfg, grid, {}, true);
    CHECK(sh.nested);
    REQUIRE(sh.tubes.size() == 5);
    for (const auto& r : sh.nesting) CHECK(r.ok);
    const auto sizes = sh.region_sizes();
    REQUIRE(sizes.size() == 6);
    std::size_t total = 0;
    for (auto n : sizes) total += n;
    CHECK(total == grid.size());
    // each node's label is the first tube that holds it
    for (std::size_t n = 0; n < grid.size(); n += 97) {
      int first = 0;
      for (int j = 0; j < 5 && !first; ++j)
        if (sh.tubes[j].values[n] <= 0.0) first = j + 1;
      CHECK(sh.region[n] == first);
    }
    // world states along the predicted path land in the innermost regions
    CHECK(sh.region_of(now) == 1);
    CHECK(sh.region_of(step_vehicle(now, {0.5}, 1.0)) == 1);
    CHECK(sh.region_of(step_vehicle(now, {-0.5}, 1.0)) >= 2);
    CHECK(sh.region_of(step_vehicle(now, {-0.5}, 1.0)) <= 5);
    CHECK(sh.region_of({now.px - 8.0, now.py, now.psi}) == 0);
  }
  SUBCASE("one region") {
    const auto cfg = config_with({1.0}, 1);
    const auto s = algorithm1_bounds(history_at(now), constant({0, 1, 0}), cfg, {0, 0});
    const auto sh = build_shfrs(s, now, cfg, grid);
    REQUIRE(sh.tubes.size() == 1);
    std::size_t in = 0;
    for (double v : sh.tubes[0].values) in += v <= 0.0;
    CHECK(sh.region_sizes()[1] == in);
  }
  SUBCASE("equal bounds leave the outer ring empty") {
    const auto cfg = config_with({0.2, 0.2}, 1);
    const auto s = algorithm1_bounds(history_at(now), constant({0, 1, 0}), cfg, {0, 0});
    const auto sh = build_shfrs(s, now, cfg, grid);
    CHECK(sh.region_sizes()[2] == 0);
  }
  SUBCASE("cache returns the same tubes") {
    const ShfrsConfig cfg;
    const auto s = algorithm1_bounds(history_at(now), constant({0.5, 0.3, 0.2}), cfg, {0, 0});
    TubeCache cache;
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = build_shfrs(s, now, cfg, grid, {}, false, &cache);
    const auto t1 = std::chrono::steady_clock::now();
    const auto b = build_shfrs(s, {-1, 4, -2.0}, cfg, grid, {}, false, &cache);
    const auto t2 = std::chrono::steady_clock::now();
    for (int j = 0; j < 5; ++j) CHECK(a.tubes[j].values == b.tubes[j].values);
    CHECK((t2 - t1) < (t1 - t0));
  }
  SUBCASE("shape mismatch") {
    const auto s = algorithm1_bounds(history_at(now), constant({0, 1, 0}), config_with({0.0, 1.0}, 1), {0, 0});
    CHECK_THROWS_AS(build_shfrs(s, now, ShfrsConfig{}, grid), std::invalid_argument);
  }
}

TEST_CASE("probability estimates") {
  const Grid3 grid = grid_preset("frs");
  std::vector<Trajectory> trajs;
  for (std::uint64_t seed : {1u, 2u, 3u})
    trajs.push_back(simulate_episode(generate_scene(seed), [](const VehicleState&, const VehicleState&, int k) {
      return (k / 7) % 3 == 0 ? 0.0 : ((k / 7) % 3 == 1 ? 0.5 : -0.5);
    }));
  trajs.push_back(Trajectory{{trajs[0].samples.begin(), trajs[0].samples.begin() + 5}, kSampleDt});

  SUBCASE("full range is certain") {
    const auto cfg = config_with({1.0}, 1);
    const auto e = estimate_probabilities(trajs, constant({0, 1, 0}), cfg, grid);
    CHECK(e.p == std::vector<double>{1.0});
    CHECK(e.anchors == 3 * 41);
    CHECK(e.skipped_trajectories == 1);
    CHECK(e.states_checked == e.anchors * 11);
    CHECK(e.unique_tubes == 1);
  }
  SUBCASE("defaults are monotone and end at one") {
    const ShfrsConfig cfg;
    const auto e = estimate_probabilities(trajs, constant({0.1, 0.8, 0.1}), cfg, grid);
    REQUIRE(e.p.size() == 5);
    CHECK(e.monotone);
    for (std::size_t j = 1; j < e.p.size(); ++j) CHECK(e.p[j] >= e.p[j - 1]);
    CHECK(e.p.back() == 1.0);
    CHECK(e.p.front() < 1.0);
    CHECK(e.off_grid_fraction() == 0.0);
    const auto j = to_json(e);
    CHECK(j.at("p").size() == 5);
  }
}

TEST_CASE("region raster") {
  const Grid3 grid = grid_preset("frs");
  const VehicleState now{1, 2, 0.3};
  const ShfrsConfig cfg;
  const auto s = algorithm1_bounds(history_at(now), constant({0.5, 0.3, 0.2}), cfg, {0, 0});
  const auto sh = build_shfrs(s, now, cfg, grid);
  const auto r = project_regions(sh);
  REQUIRE(r.pixels.size() == r.width * r.height);
  for (auto px : r.pixels) CHECK(px <= 5);

  const auto& m = r.world_to_pixel;
  const double col = m[0] * now.px + m[1] * now.py + m[2];
  const double row = m[3] * now.px + m[4] * now.py + m[5];
  const auto ci = static_cast<std::size_t>(std::lround(col)), ri = static_cast<std::size_t>(std::lround(row));
  REQUIRE(ci < r.width);
  REQUIRE(ri < r.height);
  CHECK(r.pixels[ri * r.width + ci] == 1);
  // rows grow southward
  CHECK(m[4] < 0.0);

  // a pixel of region j is inside the projection of tube j
  for (std::size_t i = 0; i < r.pixels.size(); i += 7) {
    const int j = r.pixels[i];
    if (j == 0) continue;
    const double c = static_cast<double>(i % r.width), w = static_cast<double>(i / r.width);
    // invert the affine map
    const double det = m[0] * m[4] - m[1] * m[3];
    const double x = (m[4] * (c - m[2]) - m[1] * (w - m[5])) / det;
    const double y = (-m[3] * (c - m[2]) + m[0] * (w - m[5])) / det;
    bool inside = false;
    for (std::size_t k = 0; k < grid.dims[2] && !inside; ++k) {
      const int got = sh.region_of({x, y, now.psi + grid.coord(2, k)});
      inside = got != 0 && got <= j;
    }
    CHECK(inside);
  }

  const std::string pgm = to_pgm(r);
  const std::string header = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  CHECK(pgm.substr(0, header.size()) == header);
  CHECK(pgm.size() == header.size() + r.pixels.size());
  const auto j = raster_json(r);
  CHECK(j.at("width") == r.width);
  CHECK(j.at("world_to_pixel").size() == 6);
  CHECK(j.contains("pgm_base64"));
}
