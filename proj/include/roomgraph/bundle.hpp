#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/agents.hpp"
#include "roomgraph/composer.hpp"
#include "roomgraph/evaluation.hpp"
#include "roomgraph/solver.hpp"

namespace roomgraph {

// Everything that changes a design's result, recorded in request.json.
struct DesignConfig {
  PipelineOptions pipeline;
  SolverConfig solver;
  int retrieval_k = 1;
};

nlohmann::json design_config_to_json(const DesignConfig& config);
// Missing keys keep their defaults. Throws Error(kConfigError).
DesignConfig design_config_from_json(const nlohmann::json& j);
// First 16 hex digits of the SHA-256 of the canonical config JSON.
std::string config_hash(const DesignConfig& config);

// Stages in execution order.
inline constexpr std::array<const char*, 7> kStages = {"designer", "architect",       "engineer", "corrector",
                                                       "solve_layout", "retrieve_assets", "compose"};
// Throws Error(kUnknownStage).
size_t stage_index(const std::string& stage);

// Checks a replay request without running it. Throws Error(kUnknownStage),
// Error(kInvalidArgument).
void validate_replay(const std::string& stage, const nlohmann::json& overrides);

struct DesignBundle {
  std::string design_id;
  int version = 1;
  DesignRequest request;
  DesignConfig config;
  std::string status = "pending";  // "solved", "unsat" or "failed" once run
  std::string error;               // failure message
  std::string error_code;          // error_code_name of the failure
  std::string failed_stage;
  std::optional<int> replayed_from;
  std::string replay_stage;
  nlohmann::json overrides = nlohmann::json::object();

  std::vector<StageTranscript> transcripts;  // stage order
  std::optional<SceneGraph> graph;           // after the corrector
  std::vector<Violation> violations;         // found before correction
  std::optional<Layout> layout;
  std::optional<std::vector<Retrieval>> retrievals;
  std::optional<SceneManifest> manifest;
  std::string floorplan_svg;
  std::optional<MetricsReport> metrics;
  nlohmann::json timings = nlohmann::json::object();  // stage -> ms

  const StageTranscript* transcript(const std::string& stage) const;
};

struct StageContext {
  GenerationBackend* backend = nullptr;  // agent stages only
  const AssetIndex* index = nullptr;
  Embedder* embedder = nullptr;
};

// Runs every stage. Stage failures are caught and recorded in status,
// error and failed_stage so a partial bundle can still be written.
DesignBundle run_design(const std::string& design_id, const DesignRequest& request, const DesignConfig& config,
                        const StageContext& ctx);

// Re-runs `stage` and everything after it on a copy of `bundle`.
// Overrides: {"seed": n}, {"solver": {...}}, {"graph": document} (for
// corrector or solve_layout), {"assets": {node: asset_id}}.
// Throws Error(kUnknownStage), Error(kMissingInput), Error(kInvalidArgument).
DesignBundle rerun_from(const DesignBundle& bundle, const std::string& stage, const nlohmann::json& overrides,
                        const StageContext& ctx);

// <root>/<design_id>/v<version>
std::filesystem::path bundle_dir(const std::filesystem::path& root, const std::string& design_id, int version);
// Highest existing version, 0 when none.
int latest_version(const std::filesystem::path& root, const std::string& design_id);

// Writes the artifacts and index.json into a new version directory and
// returns it. Throws Error(kIoError) naming the artifact, including when the
// version already exists.
std::filesystem::path write_bundle(const DesignBundle& bundle, const std::filesystem::path& root);
// Throws Error(kIoError), Error(kParseError).
DesignBundle read_bundle(const std::filesystem::path& dir);

// Artifact name -> sha256 from a bundle's index.json.
std::map<std::string, std::string> bundle_checksums(const std::filesystem::path& dir);

// Loads the bundle at `dir`, re-runs from `stage` and writes the result as
// the next version of the same design. Returns the new directory.
std::filesystem::path replay_stage(const std::filesystem::path& dir, const std::string& stage,
                                   const nlohmann::json& overrides, const StageContext& ctx);

}  // namespace roomgraph
