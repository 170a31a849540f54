#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/bundle.hpp"

namespace httplib {
class Server;
}

namespace roomgraph {

// Settings shared by the CLI and the HTTP service. Loaded from an INI file
// with sections [backend], [decoding], [pipeline], [solver], [retrieval],
// [output], [evaluator] and [service]; see docs/formats.md.
struct RunConfig {
  std::string backend = "canned";  // "canned" or "remote"
  std::filesystem::path fixtures;  // canned mode
  RemoteBackendConfig remote;
  DecodingParams decoding;
  int max_retries = 3;
  int engineer_parallelism = 1;
  SolverConfig solver;
  std::filesystem::path index;            // empty: placeholders only
  std::string embedder = "none";          // "none", "table" or "remote"
  std::filesystem::path embedding_table;  // embedder = table
  RemoteEmbedderConfig remote_embedder;
  int retrieval_k = 1;
  std::filesystem::path output_root = "designs";
  bool evaluator = false;
  RemoteVlmConfig vlm;
  int evaluator_runs = 3;
  int workers = 2;
};

// Relative paths are resolved against the file's directory. Throws
// Error(kConfigError) for unknown keys, bad values or an unreadable file.
RunConfig load_run_config(const std::filesystem::path& path);

// Canned mode needs an existing fixture directory; remote mode needs a base
// URL and a set key variable. Throws Error(kConfigError).
void validate_run_config(const RunConfig& config);

DesignConfig design_config(const RunConfig& config);

// Backend, index and embedder opened from a RunConfig.
struct Runtime {
  std::unique_ptr<GenerationBackend> backend;
  std::optional<AssetIndex> index;
  std::unique_ptr<Embedder> embedder;

  StageContext context() const;
};

// Throws Error(kConfigError).
Runtime open_runtime(const RunConfig& config);

inline constexpr int kExitSolved = 0;
inline constexpr int kExitUnsat = 2;
inline constexpr int kExitBackendFailure = 3;
inline constexpr int kExitConfigError = 4;

int exit_code_for(const DesignBundle& bundle);

struct DesignOutcome {
  std::filesystem::path dir;
  DesignBundle bundle;
  int exit_code = 0;
};

// run_design followed by write_bundle; the bundle is written whatever the
// status.
DesignOutcome cmd_design(const std::string& design_id, const DesignRequest& request, const RunConfig& config,
                         const Runtime& runtime);

struct SolveOutcome {
  Layout layout;
  std::string floorplan_svg;  // empty when unsat
  int exit_code = 0;
};

// Solver-only path for a pre-authored graph document. Writes layout.json and,
// when solved, floorplan.svg into out_dir (skipped when out_dir is empty).
// Throws Error(kParseError), Error(kInvalidArgument) when the document does
// not validate.
SolveOutcome cmd_solve(const nlohmann::json& graph_document, const SolverConfig& solver,
                       const std::filesystem::path& out_dir);

// Each input is a bundle directory (its manifest.json is used) or a manifest
// file. With a client, scenes whose directory holds renders/*.png are rated
// and the ratings attached under "rating".
MetricsReport cmd_evaluate(const std::vector<std::filesystem::path>& inputs, VlmClient* client = nullptr,
                           int runs = 3);

// Fixed-size pool running queued jobs in FIFO order.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  ~WorkerPool();
  void submit(std::function<void()> job);
  // Blocks until the queue is empty and no job is running.
  void drain();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::thread> threads_;
  int running_ = 0;
  bool stopping_ = false;
};

struct JobStatus {
  std::string job_id;
  std::string design_id;
  std::string kind;  // "design" or "replay"
  std::string state = "queued";  // queued, running, done, error
  int version = 0;               // written version once done
  std::string error;
  std::string error_code;
};

nlohmann::json job_to_json(const JobStatus& job);

// HTTP front end over bundles in config.output_root. Routes:
//   POST /designs                     {"prompt", "room", "n", "id"?} -> 202 job
//   GET  /designs/{id}[?version=N]    index.json, or the job while pending
//   GET  /designs/{id}/graph|layout|floorplan|manifest[?version=N]
//   POST /designs/{id}/replay         {"stage", "overrides"} -> 202 job
//   GET  /jobs/{job}
//   GET  /assets/search?q=&k=
//   GET  /healthz
class DesignService {
 public:
  DesignService(RunConfig config, Runtime runtime);
  ~DesignService();

  // Binds and serves on a background thread; returns the bound port.
  // port 0 picks a free one. Throws Error(kIoError).
  int start(const std::string& host, int port);
  // Blocks until stop() is called from another thread.
  void listen(const std::string& host, int port);
  void stop();
  // Waits for every queued job.
  void drain();

  std::optional<JobStatus> job(const std::string& job_id) const;

 private:
  void routes();
  // Picks or claims a design id; nullopt when the requested one is taken.
  std::optional<std::string> reserve_design(const std::string& requested);
  std::string enqueue(const std::string& design_id, const std::string& kind, std::function<int()> work);
  std::mutex& design_lock(const std::string& design_id);

  RunConfig config_;
  Runtime runtime_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  WorkerPool pool_;
  mutable std::mutex mu_;
  std::map<std::string, JobStatus> jobs_;
  std::map<std::string, std::string> pending_design_;  // design id -> job id of its first run
  std::map<std::string, std::unique_ptr<std::mutex>> design_locks_;
  int next_job_ = 1;
};

}  // namespace roomgraph
