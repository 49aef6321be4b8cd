#include "reachpred/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "reachpred/trajectory_io.hpp"
#include "reachpred/vf_io.hpp"

namespace fs = std::filesystem;

namespace reachpred {

nlohmann::json ServiceError::body() const {
  nlohmann::json b = extra.is_object() ? extra : nlohmann::json::object();
  b["error"] = what();
  return b;
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::instructions: return "instructions";
    case Phase::practice: return "practice";
    case Phase::main: return "main";
  }
  return "main";
}

Phase parse_phase(std::string_view s) {
  if (s == "instructions") return Phase::instructions;
  if (s == "practice") return Phase::practice;
  if (s == "main") return Phase::main;
  throw ServiceError(400, "unknown phase '" + std::string(s) + "' (instructions|practice|main)");
}

double key_omega(std::string_view key) {
  if (key == "left") return 0.5;
  if (key == "straight") return 0.0;
  if (key == "right") return -0.5;
  throw ServiceError(400, "unknown key '" + std::string(key) + "' (left|straight|right)");
}

namespace {

nlohmann::json state_json(const VehicleState& s) { return {{"x", s.px}, {"y", s.py}, {"psi", s.psi}}; }

double separation(const JointState& s) { return std::hypot(s.human.px - s.robot.px, s.human.py - s.robot.py); }

}  // namespace

SessionManager::SessionManager(ServiceConfig config) : config_(std::move(config)) {
  try {
    grid_ = grid_preset(config_.grid);
    config_.shfrs.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("service: ") + e.what());
  }
  fs::create_directories(config_.data_dir);
  load_index();
  load_models();
  if (!config_.default_model.empty() && !models_.count(config_.default_model))
    throw std::invalid_argument("service: unknown default model '" + config_.default_model + "'");
}

SessionManager::~SessionManager() = default;

void SessionManager::load_index() {
  const fs::path p = config_.data_dir / "index.json";
  if (fs::exists(p)) index_ = load_json(p);
  if (!index_.is_array()) throw std::invalid_argument("service: " + p.string() + " is not a JSON array");
}

void SessionManager::save_index() {
  const fs::path p = config_.data_dir / "index.json";
  const fs::path tmp = config_.data_dir / "index.json.tmp";
  save_json(tmp, index_);
  fs::rename(tmp, p);
}

void SessionManager::load_models() {
  if (config_.models_dir.empty()) return;
  if (!fs::is_directory(config_.models_dir))
    throw std::invalid_argument("service: models directory not found: " + config_.models_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(config_.models_dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (name.ends_with(".probabilities.json")) continue;
    nlohmann::json j;
    try {
      j = load_json(f);
      if (!j.is_object() || !j.contains("family")) continue;
      ModelEntry m;
      m.model = classifier_from_json(j);
      m.file = f;
      fs::path rel = fs::relative(f, config_.models_dir);
      rel.replace_extension();
      m.id = rel.generic_string();
      m.task = j.value("task", classes_of(m.model) == 3 ? "I" : "II");
      if (!config_.vf.empty())
        m.vf_path = config_.vf;
      else if (j.contains("value_function"))
        m.vf_path = j.at("value_function").get<std::string>();
      fs::path probs = f;
      probs.replace_extension(".probabilities.json");
      if (fs::exists(probs)) {
        const auto pj = load_json(probs);
        const auto& p = pj.contains("probabilities") && pj.at("probabilities").is_object()
                            ? pj.at("probabilities").at("p")
                            : pj.at("p");
        m.probabilities = p.get<std::vector<double>>();
      }
      models_.emplace(m.id, std::move(m));
    } catch (const std::exception&) {
      continue;  // not a model file
    }
  }
}

const ValueFunction* SessionManager::value_function(const fs::path& p) {
  if (p.empty()) return nullptr;
  std::lock_guard lock(mu_);
  auto it = vfs_.find(p.string());
  if (it != vfs_.end()) return it->second.get();
  try {
    auto vf = std::make_unique<ValueFunction>(load_value_function(p));
    return vfs_.emplace(p.string(), std::move(vf)).first->second.get();
  } catch (const std::exception& e) {
    throw ServiceError(500, std::string("cannot load value function: ") + e.what());
  }
}

nlohmann::json SessionManager::models() {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [id, m] : models_) {
    list.push_back({{"id", id},
                    {"family", std::string(family_name(family_of(m.model)))},
                    {"layout", std::string(feature_set_name(layout_of(m.model)))},
                    {"task", m.task},
                    {"classes", classes_of(m.model)},
                    {"overlay", classes_of(m.model) == 3},
                    {"probabilities", m.probabilities ? nlohmann::json(*m.probabilities) : nlohmann::json(nullptr)}});
  }
  return {{"models", list},
          {"default", config_.default_model.empty() ? nlohmann::json(nullptr) : nlohmann::json(config_.default_model)}};
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return it->second;
}

nlohmann::json SessionManager::create(const nlohmann::json& body) {
  if (!body.is_object()) throw ServiceError(400, "request body must be a JSON object");
  auto s = std::make_shared<Session>();
  std::uint64_t seed = 0;
  {
    std::lock_guard lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_));
    s->id = buf;
    seed = next_id_;
    ++next_id_;
  }
  try {
    if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
    s->phase = parse_phase(body.value("phase", std::string("main")));
    s->subject_id = body.value("subject_id", std::string("human"));
    if (body.contains("model_id") && !body.at("model_id").is_null())
      s->model_id = body.at("model_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(400, std::string("bad request body: ") + e.what());
  }
  if (s->subject_id.empty() || s->subject_id.find_first_of("/\\.") != std::string::npos)
    throw ServiceError(400, "subject_id must be non-empty and contain no '/', '\\' or '.'");
  if (!s->model_id && !config_.default_model.empty()) s->model_id = config_.default_model;
  if (s->model_id && !models_.count(*s->model_id)) {
    nlohmann::json catalog = nlohmann::json::array();
    for (const auto& [id, m] : models_) catalog.push_back(id);
    throw ServiceError(400, "unknown model_id '" + *s->model_id + "'", {{"available_models", catalog}});
  }

  s->scene = generate_scene(seed);
  s->steps = static_cast<int>(std::lround(s->scene.duration / kSampleDt));
  s->state = {s->scene.human0, s->scene.robot0};
  s->recording.dt = kSampleDt;
  s->min_separation = separation(s->state);
  {
    std::lock_guard lock(mu_);
    sessions_[s->id] = s;
  }
  return get(s->id);
}

nlohmann::json SessionManager::get(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return {{"id", s->id},
          {"subject_id", s->subject_id},
          {"phase", std::string(phase_name(s->phase))},
          {"model_id", s->model_id ? nlohmann::json(*s->model_id) : nlohmann::json(nullptr)},
          {"seed", s->scene.seed},
          {"scene",
           {{"human0", state_json(s->scene.human0)},
            {"robot0", state_json(s->scene.robot0)},
            {"goal", {{"x", s->scene.goal.x}, {"y", s->scene.goal.y}}},
            {"duration", s->scene.duration},
            {"capture_radius", kCaptureRadius}}},
          {"dt", kSampleDt},
          {"steps", s->steps},
          {"step", s->step},
          {"human", state_json(s->state.human)},
          {"robot", state_json(s->state.robot)},
          {"done", s->sealed}};
}

fs::path SessionManager::store_file(const std::string& subject, bool practice) const {
  return config_.data_dir / (subject + (practice ? ".practice.jsonl" : ".jsonl"));
}

void SessionManager::seal(Session& s) {
  s.sealed = true;
  if (s.phase == Phase::instructions) return;  // free play is not recorded
  const bool practice = s.phase == Phase::practice;
  std::lock_guard lock(store_mu_);
  int traj = 0;
  for (const auto& e : index_)
    if (e.at("subject_id") == s.subject_id && e.at("phase") == phase_name(s.phase)) ++traj;
  {
    std::ofstream os(store_file(s.subject_id, practice), std::ios::app);
    if (!os) throw ServiceError(500, "cannot write trajectory store");
    std::string block;
    for (const auto& smp : s.recording.samples) block += sample_to_json(traj, smp).dump() + "\n";
    os << block;
  }
  index_.push_back({{"session_id", s.id},
                    {"subject_id", s.subject_id},
                    {"phase", std::string(phase_name(s.phase))},
                    {"seed", s.scene.seed},
                    {"traj", traj},
                    {"samples", s.recording.size()},
                    {"min_separation", s.min_separation},
                    {"danger_zone_entered", s.min_separation < kCaptureRadius}});
  save_index();
}

nlohmann::json SessionManager::step(const std::string& id, const std::string& key) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->sealed) throw ServiceError(409, "session '" + id + "' has ended");
  const double u = key_omega(key);
  const DubinsParams params;

  s->recording.samples.push_back({s->step, s->step * kSampleDt, s->state.human, s->state.robot, u});
  const ControlInput ur = robot_policy(s->state.robot, s->scene.goal, params);
  s->state.human = step_vehicle(s->state.human, {u}, kSampleDt, params);
  s->state.robot = step_vehicle(s->state.robot, ur, kSampleDt, params);
  ++s->step;
  const double sep = separation(s->state);
  s->min_separation = std::min(s->min_separation, sep);

  nlohmann::json out = {{"id", s->id},
                        {"step", s->step},
                        {"t", s->step * kSampleDt},
                        {"human", state_json(s->state.human)},
                        {"robot", state_json(s->state.robot)},
                        {"separation", sep},
                        {"in_danger_zone", sep < kCaptureRadius},
                        {"done", false}};
  if (s->step == s->steps) {
    s->recording.samples.push_back({s->step, s->step * kSampleDt, s->state.human, s->state.robot, 0.0});
    seal(*s);
    out["done"] = true;
    out["summary"] = {{"samples", s->recording.size()},
                      {"min_separation", s->min_separation},
                      {"danger_zone_entered", s->min_separation < kCaptureRadius},
                      {"stored", s->phase != Phase::instructions}};
  }
  return out;
}

nlohmann::json SessionManager::overlay(const std::string& id) {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = find(id);
  std::vector<JointState> history;
  Point2 goal;
  std::string model_id;
  {
    std::lock_guard lock(s->mu);
    if (!s->model_id) throw ServiceError(400, "session '" + id + "' has no model");
    model_id = *s->model_id;
    for (const auto& smp : s->recording.samples) history.push_back({smp.human, smp.robot});
    if (!s->sealed) history.push_back(s->state);
    goal = s->scene.goal;
  }
  const ModelEntry& m = models_.at(model_id);
  Predictor predictor;
  try {
    predictor = model_predictor(m.model, value_function(m.vf_path));
  } catch (const std::invalid_argument& e) {
    throw ServiceError(400, std::string("model cannot drive the overlay: ") + e.what());
  }
  const ShfrsConfig& cfg = config_.shfrs;
  const BoundSchedule schedule = algorithm1_bounds(history, predictor, cfg, goal);
  const Shfrs sh = build_shfrs(schedule, history.back().human, cfg, grid_, {}, false, &cache_);
  const RegionRaster raster = project_regions(sh);

  // Without a stored estimate only the outermost value is known, and only
  // when that region spans every input.
  nlohmann::json p = nlohmann::json::array();
  std::string source = "estimate";
  if (m.probabilities && m.probabilities->size() == static_cast<std::size_t>(cfg.regions())) {
    for (double q : *m.probabilities) p.push_back(q);
  } else {
    source = "none";
    const DubinsParams params;
    bool full = true;
    for (const auto& b : schedule.bounds.back()) full = full && b.lo <= params.omega_min && b.hi >= params.omega_max;
    for (int j = 0; j < cfg.regions(); ++j) p.push_back(nullptr);
    if (full) p.back() = 1.0;
  }

  nlohmann::json nesting = nlohmann::json::array();
  for (const auto& r : sh.nesting) nesting.push_back({{"ok", r.ok}, {"violations", r.violations}});
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {{"id", id},
          {"step", static_cast<int>(history.size()) - 1},
          {"model_id", model_id},
          {"regions", cfg.regions()},
          {"raster", raster_json(raster)},
          {"probabilities", p},
          {"probabilities_source", source},
          {"nested", sh.nested},
          {"nesting", nesting},
          {"region_sizes", sh.region_sizes()},
          {"schedule", to_json(schedule)},
          {"config", to_json(cfg)},
          {"elapsed_ms", ms}};
}

nlohmann::json SessionManager::list_trajectories(bool include_practice) {
  std::lock_guard lock(store_mu_);
  std::map<std::string, nlohmann::json> by;
  for (const auto& e : index_) {
    const std::string phase = e.at("phase").get<std::string>();
    if (phase == "practice" && !include_practice) continue;
    const std::string subject = e.at("subject_id").get<std::string>();
    auto& entry = by[subject];
    if (entry.is_null())
      entry = {{"subject_id", subject},
               {"policy_params", "human"},
               {"scene_seeds", nlohmann::json::array()},
               {"sessions", nlohmann::json::array()},
               {"trajectories", 0},
               {"practice_trajectories", 0}};
    if (phase == "practice") {
      entry["practice_trajectories"] = entry["practice_trajectories"].get<int>() + 1;
    } else {
      entry["trajectories"] = entry["trajectories"].get<int>() + 1;
      entry["scene_seeds"].push_back(e.at("seed"));
    }
    entry["sessions"].push_back(e);
  }
  nlohmann::json out = nlohmann::json::array();
  for (auto& [k, v] : by) out.push_back(v);
  return out;
}

std::string SessionManager::export_trajectories(const std::string& subject, bool practice) {
  std::lock_guard lock(store_mu_);
  const fs::path f = store_file(subject, practice);
  bool known = false;
  for (const auto& e : index_) known = known || e.at("subject_id") == subject;
  if (!known || subject.find_first_of("/\\") != std::string::npos)
    throw ServiceError(404, "unknown subject '" + subject + "'");
  if (!fs::exists(f)) return {};
  std::ifstream is(f, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct HttpService::Impl {
  SessionManager& mgr;
  httplib::Server server;
  std::thread thread;

  explicit Impl(SessionManager& m) : mgr(m) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    auto reply = [](httplib::Response& res, int status, const nlohmann::json& j) {
      res.status = status;
      res.set_content(j.dump(), "application/json");
    };
    auto guard = [reply](auto fn) {
      return [fn, reply](const httplib::Request& req, httplib::Response& res) {
        try {
          fn(req, res);
        } catch (const ServiceError& e) {
          reply(res, e.status, e.body());
        } catch (const std::exception& e) {
          reply(res, 500, {{"error", e.what()}});
        }
      };
    };
    auto parse_body = [](const httplib::Request& req) {
      if (req.body.empty()) return nlohmann::json::object();
      try {
        return nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ServiceError(400, std::string("invalid JSON: ") + e.what());
      }
    };
    auto flag = [](const httplib::Request& req, const char* name) {
      if (!req.has_param(name)) return false;
      const std::string v = req.get_param_value(name);
      return v == "1" || v == "true" || v == "yes";
    };

    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Post("/sessions", guard([this, reply, parse_body](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 201, mgr.create(parse_body(req)));
                }));
    server.Post(R"(/sessions/([^/]+)/step)",
                guard([this, reply, parse_body](const httplib::Request& req, httplib::Response& res) {
                  const auto body = parse_body(req);
                  if (!body.is_object() || !body.contains("key") || !body.at("key").is_string())
                    throw ServiceError(400, "body must be {\"key\": \"left\"|\"straight\"|\"right\"}");
                  reply(res, 200, mgr.step(req.matches[1], body.at("key").get<std::string>()));
                }));
    server.Get(R"(/sessions/([^/]+)/shfrs)", guard([this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, mgr.overlay(req.matches[1]));
               }));
    server.Get(R"(/sessions/([^/]+))", guard([this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, mgr.get(req.matches[1]));
               }));
    server.Get("/trajectories", guard([this, reply, flag](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, mgr.list_trajectories(flag(req, "include_practice")));
               }));
    server.Get(R"(/trajectories/([^/]+)/export)",
               guard([this, flag](const httplib::Request& req, httplib::Response& res) {
                 const bool practice = req.has_param("phase") && req.get_param_value("phase") == "practice";
                 (void)flag;
                 res.status = 200;
                 res.set_content(mgr.export_trajectories(req.matches[1], practice), "application/x-ndjson");
               }));
    server.Get("/models", guard([this, reply](const httplib::Request&, httplib::Response& res) {
                 reply(res, 200, mgr.models());
               }));
  }
};

HttpService::HttpService(SessionManager& manager) : impl_(std::make_unique<Impl>(manager)) {}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpService::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace reachpred
