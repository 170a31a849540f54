#include "roomgraph/service.hpp"

#include <httplib.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "roomgraph/checksum.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/scene_io.hpp"

namespace roomgraph {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfigError, key + ": expected a number, got '" + v + "'");
}

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kConfigError, key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kConfigError, key + ": expected true or false, got '" + v + "'");
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return p.is_absolute() || v.empty() ? p : base / p;
}

void apply_key(RunConfig& c, const std::string& key, const std::string& v, const fs::path& base) {
  if (key == "backend.kind") c.backend = v;
  else if (key == "backend.fixtures") c.fixtures = resolve(base, v);
  else if (key == "backend.base_url") c.remote.base_url = v;
  else if (key == "backend.model") c.remote.model = v;
  else if (key == "backend.api_key_env") c.remote.api_key_env = v;
  else if (key == "backend.timeout") c.remote.timeout_seconds = static_cast<int>(to_int(key, v));
  else if (key == "decoding.temperature") c.decoding.temperature = to_double(key, v);
  else if (key == "decoding.top_p") c.decoding.top_p = to_double(key, v);
  else if (key == "decoding.structured_output") c.decoding.structured_output = to_bool(key, v);
  else if (key == "pipeline.max_retries") c.max_retries = static_cast<int>(to_int(key, v));
  else if (key == "pipeline.engineer_parallelism") c.engineer_parallelism = static_cast<int>(to_int(key, v));
  else if (key == "solver.samples_per_object") c.solver.samples_per_object = static_cast<int>(to_int(key, v));
  else if (key == "solver.max_backtracks") c.solver.max_backtracks = static_cast<int>(to_int(key, v));
  else if (key == "solver.contact_tolerance") c.solver.contact_tolerance = to_double(key, v);
  else if (key == "solver.adjacency_gap") c.solver.adjacency_gap = to_double(key, v);
  else if (key == "solver.nonadjacent_min") c.solver.nonadjacent_min = to_double(key, v);
  else if (key == "solver.nonadjacent_max") c.solver.nonadjacent_max = to_double(key, v);
  else if (key == "solver.escalate_after") c.solver.escalate_after = static_cast<int>(to_int(key, v));
  else if (key == "solver.seed") {
    const int64_t s = to_int(key, v);
    if (s < 0) throw Error(ErrorCode::kConfigError, "solver.seed must be non-negative");
    c.solver.seed = static_cast<uint64_t>(s);
  } else if (key == "retrieval.index") c.index = resolve(base, v);
  else if (key == "retrieval.embedder") c.embedder = v;
  else if (key == "retrieval.table") c.embedding_table = resolve(base, v);
  else if (key == "retrieval.base_url") c.remote_embedder.base_url = v;
  else if (key == "retrieval.model") c.remote_embedder.model = v;
  else if (key == "retrieval.api_key_env") c.remote_embedder.api_key_env = v;
  else if (key == "retrieval.k") c.retrieval_k = static_cast<int>(to_int(key, v));
  else if (key == "output.root") c.output_root = resolve(base, v);
  else if (key == "evaluator.enabled") c.evaluator = to_bool(key, v);
  else if (key == "evaluator.base_url") c.vlm.base_url = v;
  else if (key == "evaluator.model") c.vlm.model = v;
  else if (key == "evaluator.api_key_env") c.vlm.api_key_env = v;
  else if (key == "evaluator.temperature") c.vlm.temperature = to_double(key, v);
  else if (key == "evaluator.runs") c.evaluator_runs = static_cast<int>(to_int(key, v));
  else if (key == "service.workers") c.workers = static_cast<int>(to_int(key, v));
  else throw Error(ErrorCode::kConfigError, "unknown setting " + key);
}

bool env_set(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v && *v;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, p.string() + ": " + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
}

bool valid_design_id(const std::string& id) {
  static const std::regex re("[A-Za-z0-9][A-Za-z0-9_-]{0,63}");
  return std::regex_match(id, re);
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kConfigError, "no config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path.string());
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  RunConfig c;
  const fs::path base = fs::absolute(path).parent_path();
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    if (item.inputs.size() != 1) throw Error(ErrorCode::kConfigError, key + ": expected a single value");
    apply_key(c, key, item.inputs.front(), base);
  }
  validate_run_config(c);
  return c;
}

void validate_run_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfigError, m); };
  if (c.backend == "canned") {
    if (c.fixtures.empty()) fail("canned backend needs backend.fixtures");
    if (!fs::is_directory(c.fixtures)) fail("fixture directory " + c.fixtures.string() + " does not exist");
  } else if (c.backend == "remote") {
    if (c.remote.base_url.empty()) fail("remote backend needs backend.base_url");
    if (!env_set(c.remote.api_key_env)) fail("remote backend needs $" + c.remote.api_key_env + " to be set");
  } else {
    fail("backend.kind must be canned or remote, not '" + c.backend + "'");
  }
  try {
    validate_decoding(c.decoding);
    validate_solver_config(c.solver);
  } catch (const Error& e) {
    fail(e.what());
  }
  if (c.max_retries < 0) fail("pipeline.max_retries must be >= 0");
  if (c.engineer_parallelism < 1) fail("pipeline.engineer_parallelism must be >= 1");
  if (c.retrieval_k < 1) fail("retrieval.k must be >= 1");
  if (c.embedder != "none" && c.embedder != "table" && c.embedder != "remote") {
    fail("retrieval.embedder must be none, table or remote");
  }
  if (c.embedder == "table" && c.embedding_table.empty()) fail("table embedder needs retrieval.table");
  if (c.embedder == "remote" && !env_set(c.remote_embedder.api_key_env)) {
    fail("remote embedder needs $" + c.remote_embedder.api_key_env + " to be set");
  }
  if (c.evaluator && !env_set(c.vlm.api_key_env)) fail("evaluator needs $" + c.vlm.api_key_env + " to be set");
  if (c.evaluator_runs < 1) fail("evaluator.runs must be >= 1");
  if (c.workers < 1) fail("service.workers must be >= 1");
}

DesignConfig design_config(const RunConfig& c) {
  DesignConfig d;
  for (AgentOptions* a : {&d.pipeline.designer, &d.pipeline.architect, &d.pipeline.engineer, &d.pipeline.corrector,
                          &d.pipeline.refiner}) {
    a->decoding = c.decoding;
    a->max_retries = c.max_retries;
  }
  d.pipeline.engineer_parallelism = c.engineer_parallelism;
  d.solver = c.solver;
  d.retrieval_k = c.retrieval_k;
  return d;
}

StageContext Runtime::context() const {
  return {backend.get(), index ? &*index : nullptr, embedder.get()};
}

Runtime open_runtime(const RunConfig& c) {
  validate_run_config(c);
  Runtime r;
  try {
    if (c.backend == "canned") {
      r.backend = std::make_unique<CannedBackend>(c.fixtures);
    } else {
      r.backend = std::make_unique<RemoteChatBackend>(c.remote);
    }
    if (!c.index.empty()) r.index = read_index(c.index);
    if (c.embedder == "table") {
      r.embedder = std::make_unique<TableEmbedder>(TableEmbedder::from_file(c.embedding_table));
    } else if (c.embedder == "remote") {
      r.embedder = std::make_unique<RemoteEmbedder>(c.remote_embedder);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, e.what());
  }
  return r;
}

int exit_code_for(const DesignBundle& b) {
  if (b.status == "solved") return kExitSolved;
  if (b.status == "unsat") return kExitUnsat;
  if (b.error_code == error_code_name(ErrorCode::kConfigError)) return kExitConfigError;
  return kExitBackendFailure;
}

DesignOutcome cmd_design(const std::string& design_id, const DesignRequest& request, const RunConfig& config,
                         const Runtime& runtime) {
  if (!valid_design_id(design_id)) throw Error(ErrorCode::kInvalidArgument, "bad design id '" + design_id + "'");
  DesignOutcome out;
  out.bundle = run_design(design_id, request, design_config(config), runtime.context());
  out.dir = write_bundle(out.bundle, config.output_root);
  out.exit_code = exit_code_for(out.bundle);
  return out;
}

SolveOutcome cmd_solve(const json& graph_document, const SolverConfig& solver, const fs::path& out_dir) {
  const SceneGraph graph = graph_from_document(graph_document);
  const ValidationReport report = validate_graph(graph);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "graph does not validate: " + report.front().message);
  }
  SolveOutcome out;
  out.layout = solve_layout(graph, solver);
  if (out.layout.solved()) out.floorplan_svg = render_floor_plan(out.layout, graph);
  out.exit_code = out.layout.solved() ? kExitSolved : kExitUnsat;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(out_dir / "layout.json", layout_to_json(out.layout).dump(2) + "\n");
    if (out.layout.solved()) write_file(out_dir / "floorplan.svg", out.floorplan_svg);
  }
  return out;
}

MetricsReport cmd_evaluate(const std::vector<fs::path>& inputs, VlmClient* client, int runs) {
  std::vector<std::pair<std::string, json>> scenes;
  json ratings = json::object();
  double overall = 0.0;
  for (const fs::path& in : inputs) {
    const fs::path manifest = fs::is_directory(in) ? in / "manifest.json" : in;
    const std::string name = fs::is_directory(in) ? in.string() : in.string();
    json doc;
    try {
      doc = read_json_file(manifest);
    } catch (const Error& e) {
      doc = json{{"unreadable", e.what()}};
    }
    scenes.emplace_back(name, doc);
    if (!client || !fs::is_directory(in / "renders")) continue;
    std::vector<fs::path> pngs;
    for (const auto& e : fs::directory_iterator(in / "renders")) {
      if (e.path().extension() == ".png") pngs.push_back(e.path());
    }
    std::sort(pngs.begin(), pngs.end());
    std::vector<std::string> images;
    for (const fs::path& p : pngs) images.push_back(base64_encode(read_file(p)));
    std::string prompt;
    if (fs::is_regular_file(in / "prompt.txt")) prompt = read_file(in / "prompt.txt");
    const RatingReport r = rate_scene(images, prompt, *client, runs);
    ratings[name] = rating_to_json(r);
    overall += r.overall;
  }
  MetricsReport report = compute_metrics(scenes);
  if (!ratings.empty()) {
    report.rating = json{{"scenes", ratings}, {"overall", overall / static_cast<double>(ratings.size())}};
  }
  return report;
}

WorkerPool::WorkerPool(int workers) {
  for (int i = 0; i < std::max(1, workers); ++i) {
    threads_.emplace_back([this] {
      for (;;) {
        std::function<void()> job;
        {
          std::unique_lock<std::mutex> lock(mu_);
          cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
          if (queue_.empty()) return;
          job = std::move(queue_.front());
          queue_.pop_front();
          ++running_;
        }
        job();
        {
          std::lock_guard<std::mutex> lock(mu_);
          --running_;
        }
        idle_.notify_all();
      }
    });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (std::thread& t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> job) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    queue_.push_back(std::move(job));
  }
  cv_.notify_one();
}

void WorkerPool::drain() {
  std::unique_lock<std::mutex> lock(mu_);
  idle_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

json job_to_json(const JobStatus& j) {
  json out = {{"job", j.job_id}, {"id", j.design_id}, {"kind", j.kind}, {"status", j.state}};
  if (j.version > 0) out["version"] = j.version;
  if (!j.error.empty()) out["error"] = {{"code", j.error_code}, {"message", j.error}};
  return out;
}

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kUnknownStage:
    case ErrorCode::kConfigError:
    case ErrorCode::kCyclicGraph:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kUnknownDescription:
      return 400;
    case ErrorCode::kMissingInput:
      return 409;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kEmbedderUnavailable:
    case ErrorCode::kClientUnavailable:
      return 503;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, http_status(e.code()), std::string(error_code_name(e.code())), e.what());
}

json parse_body(const httplib::Request& req) {
  try {
    return req.body.empty() ? json::object() : json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("request body: ") + e.what());
  }
}

DesignRequest request_from_body(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "body must be an object");
  DesignRequest r;
  try {
    r.user_text = body.at("prompt").get<std::string>();
    r.room = room_from_json(body.at("room"));
    r.object_count = body.value("n", 10);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("design request: ") + e.what());
  }
  if (r.user_text.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt is empty");
  if (!(r.room.width_x > 0 && r.room.depth_y > 0 && r.room.height_z > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "room dimensions must be positive");
  }
  if (r.object_count < 0) throw Error(ErrorCode::kInvalidArgument, "n must be >= 0");
  return r;
}

}  // namespace

DesignService::DesignService(RunConfig config, Runtime runtime)
    : config_(std::move(config)),
      runtime_(std::move(runtime)),
      server_(std::make_unique<httplib::Server>()),
      pool_(config_.workers) {
  routes();
}

DesignService::~DesignService() {
  stop();
  pool_.drain();
}

int DesignService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void DesignService::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void DesignService::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void DesignService::drain() { pool_.drain(); }

std::optional<JobStatus> DesignService::job(const std::string& job_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::mutex& DesignService::design_lock(const std::string& design_id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& m = design_locks_[design_id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

std::optional<std::string> DesignService::reserve_design(const std::string& requested) {
  if (!requested.empty() && !valid_design_id(requested)) {
    throw Error(ErrorCode::kInvalidArgument, "bad design id '" + requested + "'");
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto taken = [&](const std::string& id) { return fs::exists(config_.output_root / id) || pending_design_.count(id); };
  std::string id = requested;
  if (id.empty()) {
    char buf[32];
    int n = 1;
    do {
      std::snprintf(buf, sizeof buf, "design-%04d", n++);
    } while (taken(buf));
    id = buf;
  } else if (taken(id)) {
    return std::nullopt;
  }
  pending_design_[id] = "";
  return id;
}

std::string DesignService::enqueue(const std::string& design_id, const std::string& kind, std::function<int()> work) {
  std::string id;
  {
    std::lock_guard<std::mutex> lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%06d", next_job_++);
    id = buf;
    JobStatus& j = jobs_[id];
    j.job_id = id;
    j.design_id = design_id;
    j.kind = kind;
    if (kind == "design") pending_design_[design_id] = id;
  }
  pool_.submit([this, id, design_id, work = std::move(work)] {
    {
      std::lock_guard<std::mutex> lock(mu_);
      jobs_[id].state = "running";
    }
    JobStatus result;
    try {
      std::lock_guard<std::mutex> writer(design_lock(design_id));
      result.version = work();
      result.state = "done";
    } catch (const Error& e) {
      result.state = "error";
      result.error = e.what();
      result.error_code = std::string(error_code_name(e.code()));
    } catch (const std::exception& e) {
      result.state = "error";
      result.error = e.what();
      result.error_code = "Internal";
    }
    std::lock_guard<std::mutex> lock(mu_);
    JobStatus& j = jobs_[id];
    j.state = result.state;
    j.version = result.version;
    j.error = result.error;
    j.error_code = result.error_code;
    if (pending_design_[design_id] == id) pending_design_.erase(design_id);
  });
  return id;
}

void DesignService::routes() {
  httplib::Server& s = *server_;

  s.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200,
              {{"status", "ok"},
               {"backend", runtime_.backend ? runtime_.backend->name() : "none"},
               {"index_size", runtime_.index ? runtime_.index->size() : 0},
               {"embedder", config_.embedder}});
  });

  s.Post("/designs", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = parse_body(req);
      const DesignRequest request = request_from_body(body);
      const auto design_id = reserve_design(body.value("id", ""));
      if (!design_id) {
        send_error(res, 409, "Conflict", "design " + body.value("id", "") + " already exists");
        return;
      }
      const std::string job = enqueue(*design_id, "design", [this, id = *design_id, request] {
        write_bundle(run_design(id, request, design_config(config_), runtime_.context()), config_.output_root);
        return 1;
      });
      res.set_header("Location", "/designs/" + *design_id);
      send_json(res, 202, {{"id", *design_id}, {"job", job}, {"status", "queued"}});
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  auto version_dir = [this](const httplib::Request& req, const std::string& id) -> std::optional<fs::path> {
    if (!valid_design_id(id)) return std::nullopt;
    int v = latest_version(config_.output_root, id);
    if (req.has_param("version")) {
      try {
        v = std::stoi(req.get_param_value("version"));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    const fs::path dir = bundle_dir(config_.output_root, id, v);
    if (v < 1 || !fs::is_directory(dir)) return std::nullopt;
    return dir;
  };

  s.Get("/designs/:id", [this, version_dir](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    const auto dir = version_dir(req, id);
    if (!dir) {
      std::lock_guard<std::mutex> lock(mu_);
      auto p = pending_design_.find(id);
      if (p != pending_design_.end() && jobs_.count(p->second)) {
        send_json(res, 200, job_to_json(jobs_.at(p->second)));
        return;
      }
      for (const auto& [job_id, job] : jobs_) {
        if (job.design_id == id && job.kind == "design" && job.state == "error") {
          send_json(res, 200, job_to_json(job));
          return;
        }
      }
      send_error(res, 404, "NotFound", "no design " + id);
      return;
    }
    try {
      send_json(res, 200, read_json_file(*dir / "index.json"));
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  const std::map<std::string, std::pair<std::string, std::string>> artifacts = {
      {"graph", {"graph.json", "application/json"}},
      {"layout", {"layout.json", "application/json"}},
      {"floorplan", {"floorplan.svg", "image/svg+xml"}},
      {"manifest", {"manifest.json", "application/json"}}};
  for (const auto& [route, file] : artifacts) {
    s.Get("/designs/:id/" + route, [version_dir, file](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.at("id");
      const auto dir = version_dir(req, id);
      if (!dir || !fs::is_regular_file(*dir / file.first)) {
        send_error(res, 404, "NotFound", "no " + file.first + " for design " + id);
        return;
      }
      res.status = 200;
      res.set_content(read_file(*dir / file.first), file.second);
    });
  }

  s.Post("/designs/:id/replay", [this, version_dir](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    try {
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("stage") || !body["stage"].is_string()) {
        throw Error(ErrorCode::kInvalidArgument, "replay needs a stage");
      }
      const std::string stage = body["stage"];
      const json overrides = body.value("overrides", json::object());
      validate_replay(stage, overrides);
      const auto dir = version_dir(req, id);
      if (!dir) {
        send_error(res, 404, "NotFound", "no design " + id);
        return;
      }
      const std::string job = enqueue(id, "replay", [this, dir = *dir, stage, overrides] {
        const fs::path out = replay_stage(dir, stage, overrides, runtime_.context());
        return read_bundle(out).version;
      });
      send_json(res, 202, {{"id", id}, {"job", job}, {"status", "queued"}});
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  s.Get("/jobs/:job", [this](const httplib::Request& req, httplib::Response& res) {
    const auto j = job(req.path_params.at("job"));
    if (!j) {
      send_error(res, 404, "NotFound", "no job " + req.path_params.at("job"));
      return;
    }
    send_json(res, 200, job_to_json(*j));
  });

  s.Get("/assets/search", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (!runtime_.index || !runtime_.embedder) {
        send_error(res, 503, "Unavailable", "asset search needs an index and an embedder");
        return;
      }
      const std::string q = req.get_param_value("q");
      if (q.empty()) throw Error(ErrorCode::kInvalidArgument, "q is required");
      int k = 5;
      if (req.has_param("k")) {
        try {
          k = std::stoi(req.get_param_value("k"));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, "k must be an integer");
        }
      }
      json results = json::array();
      for (const Match& m : retrieve(*runtime_.index, runtime_.embedder->embed(q), k)) {
        const AssetRecord* r = runtime_.index->find(m.id);
        results.push_back({{"id", m.id}, {"similarity", m.similarity}, {"name", r->name}, {"uri", r->uri}});
      }
      send_json(res, 200, {{"query", q}, {"k", k}, {"results", results}});
    } catch (const Error& e) {
      send_error(res, e);
    }
  });
}

}  // namespace roomgraph
