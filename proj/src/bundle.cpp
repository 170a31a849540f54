#include "roomgraph/bundle.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "roomgraph/checksum.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/scene_io.hpp"

namespace fs = std::filesystem;

namespace roomgraph {

using json = nlohmann::json;

namespace {

constexpr std::array<const char*, 5> kAgentNames = {"designer", "architect", "engineer", "corrector", "refiner"};

json agent_to_json(const AgentOptions& o) {
  json j = {{"max_retries", o.max_retries},
            {"temperature", o.decoding.temperature},
            {"top_p", o.decoding.top_p},
            {"structured_output", o.decoding.structured_output}};
  if (!o.system_prompt.empty()) j["system_prompt"] = o.system_prompt;
  return j;
}

AgentOptions agent_from_json(const json& j, AgentOptions o) {
  o.max_retries = j.value("max_retries", o.max_retries);
  o.decoding.temperature = j.value("temperature", o.decoding.temperature);
  o.decoding.top_p = j.value("top_p", o.decoding.top_p);
  o.decoding.structured_output = j.value("structured_output", o.decoding.structured_output);
  o.system_prompt = j.value("system_prompt", o.system_prompt);
  return o;
}

template <typename Options>
auto& agent(Options& p, std::string_view name) {
  if (name == "designer") return p.designer;
  if (name == "architect") return p.architect;
  if (name == "engineer") return p.engineer;
  if (name == "corrector") return p.corrector;
  return p.refiner;
}

json solver_to_json(const SolverConfig& s) {
  return {{"samples_per_object", s.samples_per_object}, {"max_backtracks", s.max_backtracks},
          {"contact_tolerance", s.contact_tolerance},   {"adjacency_gap", s.adjacency_gap},
          {"nonadjacent_min", s.nonadjacent_min},       {"nonadjacent_max", s.nonadjacent_max},
          {"seed", s.seed},                             {"escalate_after", s.escalate_after}};
}

SolverConfig solver_from_json(const json& j, SolverConfig s) {
  static const std::set<std::string> known = {"samples_per_object", "max_backtracks",  "contact_tolerance",
                                              "adjacency_gap",      "nonadjacent_min", "nonadjacent_max",
                                              "seed",               "escalate_after"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error(ErrorCode::kConfigError, "unknown solver setting " + k);
  }
  s.samples_per_object = j.value("samples_per_object", s.samples_per_object);
  s.max_backtracks = j.value("max_backtracks", s.max_backtracks);
  s.contact_tolerance = j.value("contact_tolerance", s.contact_tolerance);
  s.adjacency_gap = j.value("adjacency_gap", s.adjacency_gap);
  s.nonadjacent_min = j.value("nonadjacent_min", s.nonadjacent_min);
  s.nonadjacent_max = j.value("nonadjacent_max", s.nonadjacent_max);
  s.seed = j.value("seed", s.seed);
  s.escalate_after = j.value("escalate_after", s.escalate_after);
  return s;
}

// Stage that owns a transcript; the refiner runs inside the corrector stage.
size_t transcript_stage(const std::string& name) { return stage_index(name == "refiner" ? "corrector" : name); }

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void clear_from(DesignBundle& b, size_t stage) {
  std::erase_if(b.transcripts, [&](const StageTranscript& t) { return transcript_stage(t.stage) >= stage; });
  if (stage <= stage_index("corrector")) {
    b.graph.reset();
    b.violations.clear();
  }
  if (stage <= stage_index("solve_layout")) b.layout.reset();
  if (stage <= stage_index("retrieve_assets")) b.retrievals.reset();
  b.manifest.reset();
  b.floorplan_svg.clear();
  b.metrics.reset();
  for (size_t i = stage; i < kStages.size(); ++i) b.timings.erase(kStages[i]);
  b.status = "pending";
  b.error.clear();
  b.error_code.clear();
  b.failed_stage.clear();
}

const StageTranscript& require_transcript(const DesignBundle& b, const std::string& stage) {
  const StageTranscript* t = b.transcript(stage);
  if (!t || t->output.is_null()) throw Error(ErrorCode::kMissingInput, "bundle has no " + stage + " output");
  return *t;
}

GenerationBackend& require_backend(const StageContext& ctx, const std::string& stage) {
  if (!ctx.backend) throw Error(ErrorCode::kInvalidArgument, stage + " needs a generation backend");
  return *ctx.backend;
}

// Runs one stage; returns false when later stages must not run (unsat).
bool run_stage(DesignBundle& b, size_t stage, const json& overrides, const StageContext& ctx) {
  const std::string name = kStages[stage];
  const PipelineOptions& po = b.config.pipeline;
  if (name == "designer") {
    b.transcripts.push_back({});
    b.transcripts.back().stage = "designer";
    run_designer(b.request, require_backend(ctx, name), po.designer, &b.transcripts.back());
  } else if (name == "architect") {
    const auto proposals = proposals_from_json(require_transcript(b, "designer").output);
    b.transcripts.push_back({});
    StageTranscript& t = b.transcripts.back();
    t.stage = "architect";
    if (proposals.empty()) {
      t.output = json::array();
      t.notes.push_back("no proposals");
    } else {
      run_architect(proposals, b.request, require_backend(ctx, name), po.architect, &t);
    }
  } else if (name == "engineer") {
    const auto proposals = proposals_from_json(require_transcript(b, "designer").output);
    const auto statements = statements_from_json(require_transcript(b, "architect").output);
    b.transcripts.push_back({});
    StageTranscript& t = b.transcripts.back();
    t.stage = "engineer";
    if (proposals.empty()) {
      SceneGraph empty;
      empty.room = b.request.room;
      t.output = graph_to_document(empty);
      t.notes.push_back("no proposals");
    } else {
      run_engineer(proposals, statements, b.request.room, require_backend(ctx, name), po.engineer,
                   po.engineer_parallelism, &t);
    }
  } else if (name == "corrector") {
    SceneGraph g = overrides.contains("graph") ? graph_from_document(overrides["graph"])
                                               : graph_from_document(require_transcript(b, "engineer").output);
    b.violations = detect_violations(g);
    StageTranscript corr, ref;
    corr.stage = "corrector";
    ref.stage = "refiner";
    b.graph = correct_graph(std::move(g), &require_backend(ctx, name), po.corrector, po.refiner, &corr, &ref);
    b.transcripts.push_back(std::move(corr));
    b.transcripts.push_back(std::move(ref));
  } else if (name == "solve_layout") {
    if (overrides.contains("graph")) {
      SceneGraph g = graph_from_document(overrides["graph"]);
      const auto report = validate_graph(g);
      if (!report.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "graph override does not validate: " + report.front().message);
      }
      b.graph = std::move(g);
    }
    if (!b.graph) throw Error(ErrorCode::kMissingInput, "bundle has no graph.json");
    b.layout = solve_layout(*b.graph, b.config.solver);
    if (!b.layout->solved()) {
      b.status = "unsat";
      b.error = b.layout->message;
      b.error_code = std::string(error_code_name(ErrorCode::kUnsat));
      b.failed_stage = name;
      return false;
    }
  } else if (name == "retrieve_assets") {
    if (!b.graph) throw Error(ErrorCode::kMissingInput, "bundle has no graph.json");
    std::map<std::string, std::string> pins;
    if (overrides.contains("assets")) pins = overrides["assets"].get<std::map<std::string, std::string>>();
    b.retrievals = retrieve_assets(*b.graph, ctx.index, ctx.embedder, b.config.retrieval_k, pins);
  } else if (name == "compose") {
    if (!b.graph) throw Error(ErrorCode::kMissingInput, "bundle has no graph.json");
    if (!b.layout) throw Error(ErrorCode::kMissingInput, "bundle has no layout.json");
    if (!b.retrievals) throw Error(ErrorCode::kMissingInput, "bundle has no retrievals.json");
    b.manifest = export_manifest(*b.layout, *b.retrievals, *b.graph, config_hash(b.config));
    b.floorplan_svg = render_floor_plan(*b.layout, *b.graph);
    b.metrics = compute_metrics({{b.design_id, manifest_to_json(*b.manifest)}});
    b.status = "solved";
  }
  return true;
}

void run_stages(DesignBundle& b, size_t from, const json& overrides, const StageContext& ctx) {
  for (size_t s = from; s < kStages.size(); ++s) {
    const auto start = std::chrono::steady_clock::now();
    bool go_on = false;
    try {
      go_on = run_stage(b, s, overrides, ctx);
    } catch (const Error& e) {
      b.status = "failed";
      b.error = e.what();
      b.error_code = std::string(error_code_name(e.code()));
      b.failed_stage = kStages[s];
      b.timings[kStages[s]] = ms_since(start);
      return;
    }
    b.timings[kStages[s]] = ms_since(start);
    if (!go_on) return;
  }
}

void validate_overrides(const json& overrides, size_t stage) {
  if (!overrides.is_object()) throw Error(ErrorCode::kInvalidArgument, "overrides must be an object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "seed") {
      if (!value.is_number_integer() || value.get<int64_t>() < 0) throw Error(ErrorCode::kInvalidArgument, "seed must be a non-negative integer");
      if (stage > stage_index("solve_layout")) {
        throw Error(ErrorCode::kInvalidArgument, "a seed override needs solve_layout or an earlier stage");
      }
    } else if (key == "solver") {
      if (!value.is_object()) throw Error(ErrorCode::kInvalidArgument, "solver override must be an object");
      if (stage > stage_index("solve_layout")) {
        throw Error(ErrorCode::kInvalidArgument, "a solver override needs solve_layout or an earlier stage");
      }
    } else if (key == "graph") {
      if (stage != stage_index("corrector") && stage != stage_index("solve_layout")) {
        throw Error(ErrorCode::kInvalidArgument, "a graph override applies to corrector or solve_layout");
      }
    } else if (key == "assets") {
      if (!value.is_object()) throw Error(ErrorCode::kInvalidArgument, "assets override must be an object");
      for (const auto& [node, asset] : value.items()) {
        if (!asset.is_string()) throw Error(ErrorCode::kInvalidArgument, "asset id for " + node + " must be a string");
      }
      if (stage > stage_index("retrieve_assets")) {
        throw Error(ErrorCode::kInvalidArgument, "an assets override needs retrieve_assets or an earlier stage");
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown override " + key);
    }
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, p.filename().string() + ": " + e.what());
  }
}

json request_to_json(const DesignBundle& b) {
  return {{"design_id", b.design_id},
          {"user_text", b.request.user_text},
          {"room", room_to_json(b.request.room)},
          {"object_count", b.request.object_count},
          {"config", design_config_to_json(b.config)}};
}

struct Artifact {
  std::string name;
  std::string stage;
  std::string content;
  bool is_volatile = false;
};

std::vector<Artifact> artifacts_of(const DesignBundle& b) {
  std::vector<Artifact> out;
  out.push_back({"prompt.txt", "input", b.request.user_text});
  out.push_back({"request.json", "input", dump(request_to_json(b))});
  for (const StageTranscript& t : b.transcripts) {
    out.push_back({"transcripts/" + t.stage + ".json", kStages[transcript_stage(t.stage)], dump(transcript_to_json(t))});
  }
  if (b.graph) {
    out.push_back({"violations.json", "corrector", dump(violations_to_json(b.violations))});
    out.push_back({"graph.json", "corrector", dump(graph_to_document(*b.graph))});
  }
  if (b.layout) out.push_back({"layout.json", "solve_layout", dump(layout_to_json(*b.layout))});
  if (b.retrievals) out.push_back({"retrievals.json", "retrieve_assets", dump(retrievals_to_json(*b.retrievals))});
  if (b.manifest) out.push_back({"manifest.json", "compose", dump(manifest_to_json(*b.manifest))});
  if (!b.floorplan_svg.empty()) out.push_back({"floorplan.svg", "compose", b.floorplan_svg});
  if (b.metrics) out.push_back({"metrics.json", "compose", dump(metrics_to_json(*b.metrics))});
  out.push_back({"timings.json", "all", dump(b.timings), true});
  std::sort(out.begin(), out.end(), [](const Artifact& a, const Artifact& c) { return a.name < c.name; });
  return out;
}

}  // namespace

json design_config_to_json(const DesignConfig& c) {
  json agents = json::object();
  for (const char* n : kAgentNames) agents[n] = agent_to_json(agent(c.pipeline, n));
  return {{"agents", std::move(agents)},
          {"engineer_parallelism", c.pipeline.engineer_parallelism},
          {"solver", solver_to_json(c.solver)},
          {"retrieval", {{"k", c.retrieval_k}}}};
}

DesignConfig design_config_from_json(const json& j) {
  DesignConfig c;
  try {
    if (j.contains("agents")) {
      for (const auto& [name, v] : j["agents"].items()) {
        if (std::find(kAgentNames.begin(), kAgentNames.end(), name) == kAgentNames.end()) {
          throw Error(ErrorCode::kConfigError, "unknown agent " + name);
        }
        agent(c.pipeline, name) = agent_from_json(v, agent(c.pipeline, name));
      }
    }
    c.pipeline.engineer_parallelism = j.value("engineer_parallelism", c.pipeline.engineer_parallelism);
    if (j.contains("solver")) c.solver = solver_from_json(j["solver"], c.solver);
    if (j.contains("retrieval")) c.retrieval_k = j["retrieval"].value("k", c.retrieval_k);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  try {
    for (const char* n : kAgentNames) {
      const AgentOptions& o = agent(c.pipeline, n);
      validate_decoding(o.decoding);
      if (o.max_retries < 0) throw Error(ErrorCode::kInvalidArgument, std::string(n) + ": max_retries must be >= 0");
    }
    validate_solver_config(c.solver);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  if (c.pipeline.engineer_parallelism < 1) throw Error(ErrorCode::kConfigError, "engineer_parallelism must be >= 1");
  if (c.retrieval_k < 1) throw Error(ErrorCode::kConfigError, "retrieval k must be >= 1");
  return c;
}

std::string config_hash(const DesignConfig& config) {
  return sha256_hex(design_config_to_json(config).dump()).substr(0, 16);
}

size_t stage_index(const std::string& stage) {
  for (size_t i = 0; i < kStages.size(); ++i) {
    if (stage == kStages[i]) return i;
  }
  throw Error(ErrorCode::kUnknownStage, "no stage named '" + stage + "'");
}

void validate_replay(const std::string& stage, const json& overrides) { validate_overrides(overrides, stage_index(stage)); }

const StageTranscript* DesignBundle::transcript(const std::string& stage) const {
  for (const StageTranscript& t : transcripts) {
    if (t.stage == stage) return &t;
  }
  return nullptr;
}

DesignBundle run_design(const std::string& design_id, const DesignRequest& request, const DesignConfig& config,
                        const StageContext& ctx) {
  DesignBundle b;
  b.design_id = design_id;
  b.request = request;
  b.config = config;
  run_stages(b, 0, json::object(), ctx);
  return b;
}

DesignBundle rerun_from(const DesignBundle& bundle, const std::string& stage, const json& overrides,
                        const StageContext& ctx) {
  const size_t from = stage_index(stage);
  validate_overrides(overrides, from);
  for (size_t s = 0; s < from; ++s) {
    const std::string name = kStages[s];
    const bool present = (name == "designer" || name == "architect" || name == "engineer")
                             ? bundle.transcript(name) && !bundle.transcript(name)->output.is_null()
                         : name == "corrector"    ? bundle.graph.has_value()
                         : name == "solve_layout" ? bundle.layout.has_value()
                                                  : bundle.retrievals.has_value();
    const bool replaced = overrides.contains("graph") && (name == "engineer" || name == "corrector");
    if (!present && !replaced) throw Error(ErrorCode::kMissingInput, "bundle lacks the output of " + name);
  }
  DesignBundle b = bundle;
  b.replayed_from = bundle.version;
  b.replay_stage = stage;
  b.overrides = overrides;
  if (overrides.contains("solver")) {
    try {
      b.config.solver = solver_from_json(overrides["solver"], b.config.solver);
      validate_solver_config(b.config.solver);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidArgument, e.what());
    }
  }
  if (overrides.contains("seed")) b.config.solver.seed = overrides["seed"].get<uint64_t>();
  clear_from(b, from);
  run_stages(b, from, overrides, ctx);
  return b;
}

fs::path bundle_dir(const fs::path& root, const std::string& design_id, int version) {
  return root / design_id / ("v" + std::to_string(version));
}

int latest_version(const fs::path& root, const std::string& design_id) {
  int best = 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root / design_id, ec)) {
    const std::string n = entry.path().filename().string();
    if (n.size() < 2 || n[0] != 'v' || !entry.is_directory()) continue;
    if (!std::all_of(n.begin() + 1, n.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    best = std::max(best, std::stoi(n.substr(1)));
  }
  return best;
}

fs::path write_bundle(const DesignBundle& b, const fs::path& root) {
  if (b.design_id.empty() || b.design_id.find('/') != std::string::npos || b.design_id.starts_with(".")) {
    throw Error(ErrorCode::kInvalidArgument, "bad design id '" + b.design_id + "'");
  }
  const fs::path dir = bundle_dir(root, b.design_id, b.version);
  if (fs::exists(dir)) throw Error(ErrorCode::kIoError, dir.string() + " already exists");
  fs::path tmp = dir;
  tmp += ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp / "transcripts", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + tmp.string() + ": " + ec.message());

  json artifacts = json::array();
  for (const Artifact& a : artifacts_of(b)) {
    std::ofstream out(tmp / a.name, std::ios::binary);
    out << a.content;
    if (!out.good()) throw Error(ErrorCode::kIoError, "cannot write artifact " + a.name);
    json entry = {{"name", a.name}, {"stage", a.stage}, {"sha256", sha256_hex(a.content)}, {"bytes", a.content.size()}};
    if (a.is_volatile) entry["volatile"] = true;
    artifacts.push_back(std::move(entry));
  }
  const json index = {{"design_id", b.design_id},
                      {"version", b.version},
                      {"status", b.status},
                      {"error", b.error},
                      {"error_code", b.error_code},
                      {"failed_stage", b.failed_stage},
                      {"replayed_from", b.replayed_from ? json(*b.replayed_from) : json(nullptr)},
                      {"replay_stage", b.replay_stage},
                      {"overrides", b.overrides},
                      {"artifacts", std::move(artifacts)}};
  {
    std::ofstream out(tmp / "index.json", std::ios::binary);
    out << dump(index);
    if (!out.good()) throw Error(ErrorCode::kIoError, "cannot write artifact index.json");
  }
  fs::rename(tmp, dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot publish " + dir.string() + ": " + ec.message());
  return dir;
}

std::map<std::string, std::string> bundle_checksums(const fs::path& dir) {
  std::map<std::string, std::string> out;
  const json index = read_json(dir / "index.json");
  for (const json& a : index.at("artifacts")) out[a.at("name").get<std::string>()] = a.at("sha256").get<std::string>();
  return out;
}

DesignBundle read_bundle(const fs::path& dir) {
  if (!fs::exists(dir / "index.json")) throw Error(ErrorCode::kIoError, "no bundle at " + dir.string());
  const json index = read_json(dir / "index.json");
  DesignBundle b;
  std::set<std::string> names;
  try {
    for (const json& a : index.at("artifacts")) {
      const std::string name = a.at("name").get<std::string>();
      if (sha256_hex(read_text(dir / name)) != a.at("sha256").get<std::string>()) {
        throw Error(ErrorCode::kParseError, name + ": checksum mismatch");
      }
      names.insert(name);
    }
    b.design_id = index.at("design_id").get<std::string>();
    b.version = index.at("version").get<int>();
    b.status = index.at("status").get<std::string>();
    b.error = index.value("error", "");
    b.error_code = index.value("error_code", "");
    b.failed_stage = index.value("failed_stage", "");
    if (!index.at("replayed_from").is_null()) b.replayed_from = index["replayed_from"].get<int>();
    b.replay_stage = index.value("replay_stage", "");
    b.overrides = index.value("overrides", json::object());

    const json req = read_json(dir / "request.json");
    b.request = {req.at("user_text").get<std::string>(), room_from_json(req.at("room")),
                 req.at("object_count").get<int>()};
    b.config = design_config_from_json(req.at("config"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, dir.string() + ": " + e.what());
  }
  for (const char* stage : kAgentNames) {
    const std::string name = std::string("transcripts/") + stage + ".json";
    if (names.count(name)) b.transcripts.push_back(transcript_from_json(read_json(dir / name)));
  }
  if (names.count("graph.json")) b.graph = graph_from_document(read_json(dir / "graph.json"));
  if (names.count("violations.json")) b.violations = violations_from_json(read_json(dir / "violations.json"));
  if (names.count("layout.json")) b.layout = layout_from_json(read_json(dir / "layout.json"));
  if (names.count("retrievals.json")) b.retrievals = retrievals_from_json(read_json(dir / "retrievals.json"));
  if (names.count("manifest.json")) b.manifest = manifest_from_json(read_json(dir / "manifest.json"));
  if (names.count("floorplan.svg")) b.floorplan_svg = read_text(dir / "floorplan.svg");
  if (names.count("metrics.json")) b.metrics = metrics_from_json(read_json(dir / "metrics.json"));
  if (names.count("timings.json")) b.timings = read_json(dir / "timings.json");
  return b;
}

fs::path replay_stage(const fs::path& dir, const std::string& stage, const json& overrides, const StageContext& ctx) {
  stage_index(stage);
  const DesignBundle old = read_bundle(dir);
  DesignBundle next = rerun_from(old, stage, overrides, ctx);
  const fs::path root = dir.parent_path().parent_path();
  next.version = latest_version(root, old.design_id) + 1;
  return write_bundle(next, root);
}

}  // namespace roomgraph
