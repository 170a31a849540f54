#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "roomgraph/error.hpp"
#include "roomgraph/scene_io.hpp"
#include "roomgraph/service.hpp"

using namespace roomgraph;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

DesignService* g_service = nullptr;

json read_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, p.string() + ": " + e.what());
  }
}

RunConfig require_config(const std::string& path, const std::string& command) {
  if (path.empty()) throw Error(ErrorCode::kConfigError, command + " needs --config");
  return load_run_config(path);
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kUnknownStage:
    case ErrorCode::kIoError:
      return kExitConfigError;
    case ErrorCode::kUnsat:
      return kExitUnsat;
    default:
      return kExitBackendFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roomgraph: text to scene graph to collision-free room layout"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("-c,--config", config_path, "Run config (INI)")->check(CLI::ExistingFile);

  // design
  auto* design = app.add_subcommand("design", "Run the full pipeline and write a bundle");
  std::string prompt, request_path, design_id = "design", out_root;
  std::vector<double> room;
  int n = 10;
  std::optional<uint64_t> seed;
  design->add_option("-p,--prompt", prompt, "Design request text");
  design->add_option("--request", request_path, "JSON file with prompt, room and n")->check(CLI::ExistingFile);
  design->add_option("--room", room, "Room width,depth,height in meters")->delimiter(',')->expected(3);
  design->add_option("-n,--objects", n, "Objects to ask the designer for")->check(CLI::NonNegativeNumber);
  design->add_option("--id", design_id, "Design id (bundle directory name)");
  design->add_option("-o,--out", out_root, "Bundle root (overrides [output] root)");
  design->add_option("--seed", seed, "Solver seed");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve a scene graph document");
  std::string graph_path, solve_out;
  solve->add_option("graph", graph_path, "Scene graph JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("-o,--out", solve_out, "Directory for layout.json and floorplan.svg")->required();
  solve->add_option("--seed", seed, "Solver seed");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a bundle from a stage into a new version");
  std::string bundle_path, stage, overrides_text = "{}";
  replay->add_option("bundle", bundle_path, "Bundle version directory")->required()->check(CLI::ExistingDirectory);
  replay->add_option("-s,--stage", stage, "Stage to re-run from")->required();
  replay->add_option("--overrides", overrides_text, "Overrides JSON, e.g. {\"seed\": 7}");
  replay->add_option("--seed", seed, "Shorthand for a seed override");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Metrics over bundle directories or manifest files");
  std::vector<std::string> inputs;
  std::string metrics_out;
  evaluate->add_option("inputs", inputs, "Bundle directories or manifest.json files")->required();
  evaluate->add_option("-o,--out", metrics_out, "Write metrics.json here instead of stdout");

  // search
  auto* search = app.add_subcommand("search", "Query the asset index");
  std::string query;
  int k = 5;
  search->add_option("query", query, "Description to embed")->required();
  search->add_option("-k", k, "Results")->check(CLI::PositiveNumber);

  // index
  auto* index_cmd = app.add_subcommand("index", "Build an asset index from a JSON record list");
  std::string records_path, index_out;
  index_cmd->add_option("records", records_path, "[{id, embedding, size, uri, name}]")->required()->check(
      CLI::ExistingFile);
  index_cmd->add_option("-o,--out", index_out, "Index path")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*design) {
      RunConfig config = require_config(config_path, "design");
      if (!out_root.empty()) config.output_root = out_root;
      if (seed) config.solver.seed = *seed;
      DesignRequest request;
      if (!request_path.empty()) {
        const json r = read_json(request_path);
        request.user_text = r.at("prompt").get<std::string>();
        request.room = room_from_json(r.at("room"));
        request.object_count = r.value("n", n);
      }
      if (!prompt.empty()) request.user_text = prompt;
      if (!room.empty()) request.room = {room[0], room[1], room[2]};
      if (design->count("-n")) request.object_count = n;
      if (request.user_text.empty()) throw Error(ErrorCode::kConfigError, "design needs --prompt or --request");
      if (!(request.room.width_x > 0 && request.room.depth_y > 0 && request.room.height_z > 0)) {
        throw Error(ErrorCode::kConfigError, "design needs a positive --room");
      }
      const Runtime runtime = open_runtime(config);
      const DesignOutcome out = cmd_design(design_id, request, config, runtime);
      std::cout << out.dir.string() << "\n" << out.bundle.status;
      if (!out.bundle.error.empty()) std::cout << " (" << out.bundle.failed_stage << ": " << out.bundle.error << ")";
      std::cout << "\n";
      return out.exit_code;
    }
    if (*solve) {
      SolverConfig solver = config_path.empty() ? SolverConfig{} : load_run_config(config_path).solver;
      if (seed) solver.seed = *seed;
      const SolveOutcome out = cmd_solve(read_json(graph_path), solver, solve_out);
      std::cout << (out.layout.solved() ? "solved" : "unsat: " + out.layout.message) << "\n";
      return out.exit_code;
    }
    if (*replay) {
      json overrides;
      try {
        overrides = json::parse(overrides_text);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kConfigError, std::string("--overrides: ") + e.what());
      }
      if (seed) overrides["seed"] = *seed;
      validate_replay(stage, overrides);
      Runtime runtime;
      if (stage != "compose") runtime = open_runtime(require_config(config_path, stage + " replay"));
      const fs::path dir = replay_stage(bundle_path, stage, overrides, runtime.context());
      const DesignBundle b = read_bundle(dir);
      std::cout << dir.string() << "\n" << b.status << "\n";
      return exit_code_for(b);
    }
    if (*evaluate) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      std::unique_ptr<VlmClient> client;
      int runs = 3;
      if (!config_path.empty()) {
        const RunConfig config = load_run_config(config_path);
        if (config.evaluator) client = std::make_unique<RemoteVlmClient>(config.vlm);
        runs = config.evaluator_runs;
      }
      const json report = metrics_to_json(cmd_evaluate(paths, client.get(), runs));
      if (metrics_out.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        std::ofstream(metrics_out) << report.dump(2) << "\n";
      }
      return 0;
    }
    if (*search) {
      const RunConfig config = require_config(config_path, "search");
      const Runtime runtime = open_runtime(config);
      if (!runtime.index || !runtime.embedder) throw Error(ErrorCode::kConfigError, "search needs an index and embedder");
      for (const Match& m : retrieve(*runtime.index, runtime.embedder->embed(query), k)) {
        std::printf("%.6f\t%s\n", m.similarity, m.id.c_str());
      }
      return 0;
    }
    if (*index_cmd) {
      std::vector<AssetRecord> records;
      for (const json& r : read_json(records_path)) {
        AssetRecord a;
        a.id = r.at("id").get<std::string>();
        a.embedding = r.at("embedding").get<std::vector<float>>();
        const auto s = r.at("size").get<std::vector<double>>();
        if (s.size() != 3) throw Error(ErrorCode::kInvalidArgument, a.id + ": size needs 3 values");
        a.native_size = {s[0], s[1], s[2]};
        a.uri = r.value("uri", "");
        a.name = r.value("name", a.id);
        records.push_back(std::move(a));
      }
      const AssetIndex index = build_index(std::move(records));
      write_index(index, index_out);
      std::cout << index.size() << " records, sha256 " << index.checksum << "\n";
      return 0;
    }
    if (*serve) {
      const RunConfig config = require_config(config_path, "serve");
      DesignService service(config, open_runtime(config));
      g_service = &service;
      std::signal(SIGINT, [](int) { g_service->stop(); });
      std::signal(SIGTERM, [](int) { g_service->stop(); });
      std::cerr << "listening on " << host << ":" << port << "\n";
      service.listen(host, port);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackendFailure;
  }
  return 0;
}
