#include <fstream>
#include <sstream>

#include "doctest.h"
#include "reachpred/codec.hpp"
#include "reachpred/manifest.hpp"
#include "reachpred/trajectory_io.hpp"
#include "reachpred/vf_io.hpp"
#include "support.hpp"

using namespace reachpred;

namespace {

std::vector<Trajectory> sample_trajectories() {
  std::vector<Trajectory> out;
  for (std::uint64_t seed : {3u, 4u}) {
    out.push_back(simulate_episode(generate_scene(seed), [](const VehicleState&, const VehicleState&, int k) {
      return k % 4 == 0 ? 0.5 : (k % 4 == 2 ? -0.5 : 0.0);
    }));
  }
  return out;
}

std::string dump(const std::vector<Trajectory>& t) {
  std::ostringstream os;
  write_trajectories(os, t);
  return os.str();
}

std::string read_error(const std::string& text) {
  std::istringstream is(text);
  try {
    read_trajectories(is);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("trajectory JSONL round trip is exact") {
  const auto t = sample_trajectories();
  const std::string text = dump(t);
  std::istringstream is(text);
  const auto back = read_trajectories(is);
  REQUIRE(back.size() == t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    REQUIRE(back[k].size() == t[k].size());
    for (std::size_t i = 0; i < t[k].size(); ++i) {
      CHECK(back[k].samples[i].human == t[k].samples[i].human);
      CHECK(back[k].samples[i].robot == t[k].samples[i].robot);
      CHECK(back[k].samples[i].u == t[k].samples[i].u);
      CHECK(back[k].samples[i].t == t[k].samples[i].t);
    }
  }
  CHECK(dump(back) == text);

  testing::TempDir dir("io");
  save_trajectories(dir.path / "a.jsonl", t);
  CHECK(dump(load_trajectories(dir.path / "a.jsonl")) == text);
}

TEST_CASE("trajectory rows with features") {
  const auto& vf = testing::coarse_brs();
  std::ostringstream os;
  write_trajectories(os, sample_trajectories(), &vf, FeatureSetId::Bhrd);
  std::istringstream is(os.str());
  std::string first;
  std::getline(is, first);
  const auto j = nlohmann::json::parse(first);
  CHECK(j.at("layout") == "Bhrd");
  CHECK(j.at("features").size() == 8);
}

TEST_CASE("malformed trajectory rows name the field") {
  const std::string good =
      R"({"traj":0,"t":0.0,"human":{"x":0,"y":0,"psi":0},"robot":{"x":1,"y":1,"psi":0},"u":0})";
  CHECK(read_error(good + "\n").empty());
  CHECK(read_error(R"({"traj":0,"t":0.0,"human":{"x":0,"y":0,"psi":0},"u":0})")
            .find("robot") != std::string::npos);
  CHECK(read_error(R"({"traj":0,"t":0.0,"human":{"x":0,"y":0},"robot":{"x":1,"y":1,"psi":0},"u":0})")
            .find("psi") != std::string::npos);
  CHECK(read_error(R"({"traj":0,"t":0.0,"human":{"x":0,"y":0,"psi":0},"robot":{"x":1,"y":1,"psi":0},"u":0.3})")
            .find("'u'") != std::string::npos);
  CHECK(read_error(R"({"traj":0,"t":0.0,"human":{"x":"a","y":0,"psi":0},"robot":{"x":1,"y":1,"psi":0},"u":0})")
            .find("'x'") != std::string::npos);
  const std::string second =
      R"({"traj":0,"t":0.0,"human":{"x":0,"y":0,"psi":0},"robot":{"x":1,"y":1,"psi":0},"u":0})";
  const auto msg = read_error(good + "\n" + second + "\n");
  CHECK(msg.find("'t'") != std::string::npos);
  CHECK(msg.find("2") != std::string::npos);  // line number
  CHECK_FALSE(read_error("{not json\n").empty());
}

TEST_CASE("HJVF round trip and corruption") {
  const auto& vf = testing::coarse_brs();
  std::ostringstream os;
  write_value_function(os, vf);
  const std::string bytes = os.str();
  CHECK(bytes.substr(0, 4) == "HJVF");
  std::istringstream is(bytes);
  const auto back = read_value_function(is);
  CHECK(back.grid == vf.grid);
  CHECK(back.values == vf.values);
  CHECK(back.kind == vf.kind);
  CHECK(back.params == vf.params);
  CHECK(back.capture_radius == vf.capture_radius);

  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream b1(bad);
  CHECK_THROWS_AS(read_value_function(b1), FormatError);
  std::istringstream b2(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_value_function(b2), FormatError);
}

TEST_CASE("codec") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testing::TempDir dir("codec");
  {
    std::ofstream f(dir.path / "x.bin", std::ios::binary);
    f << "abc";
  }
  CHECK(sha256_file(dir.path / "x.bin") == sha256_hex("abc"));
}

TEST_CASE("run manifest lists digests") {
  testing::TempDir dir("manifest");
  save_json(dir.path / "out.json", {{"a", 1}});
  RunManifest m("unit");
  m.config = {{"k", 2}};
  m.seeds = {{"seed", 5}};
  m.add_output(dir.path / "out.json");
  m.write(dir.path / "manifest.json");
  const auto j = load_json(dir.path / "manifest.json");
  CHECK(j.at("command") == "unit");
  CHECK(j.at("seeds").at("seed") == 5);
  CHECK(j.at("version") == kToolVersion);
  CHECK(j.at("outputs").at(0).at("sha256") == sha256_file(dir.path / "out.json"));
  CHECK(j.contains("wall_time_s"));
}
