#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/backend.hpp"
#include "roomgraph/corrector.hpp"
#include "roomgraph/scene.hpp"
#include "roomgraph/transcript.hpp"

namespace roomgraph {

struct DesignRequest {
  std::string user_text;
  Room room;
  int object_count = 0;  // proposals asked of the designer
};

struct ObjectProposal {
  std::string name;
  std::string style;
  std::string material;
  Vec3 size;
  int quantity = 1;

  friend bool operator==(const ObjectProposal&, const ObjectProposal&) = default;
};

nlohmann::json proposals_to_json(const std::vector<ObjectProposal>& proposals);
std::vector<ObjectProposal> proposals_from_json(const nlohmann::json& j);

// Instance ids in proposal order: "chair_1", "chair_2", "desk_1", ...
struct Instance {
  std::string id;
  size_t proposal = 0;
};
std::vector<Instance> expand_instances(const std::vector<ObjectProposal>& proposals);

struct PlacementSpec {
  Preposition preposition = Preposition::kOn;
  std::string anchor;  // as written by the architect
  Adjacency proximity = Adjacency::kAdjacent;
};

struct PlacementStatement {
  std::string instance;
  std::vector<PlacementSpec> placement;
  std::string facing;  // as written by the architect
};

nlohmann::json statements_to_json(const std::vector<PlacementStatement>& statements);
std::vector<PlacementStatement> statements_from_json(const nlohmann::json& j);

// Node ids an architect anchor refers to: a layout node, an instance id or a
// corner ("northwest corner" gives both walls). Empty when unknown.
std::vector<std::string> resolve_anchor(const std::string& anchor, const std::vector<Instance>& instances);

// Canonical facing ("north_wall".."west_wall" or "none") of an architect
// facing phrase such as "facing the south wall"; nullopt when unrecognized.
std::optional<std::string> normalize_facing(const std::string& text);

// Names the designer must not propose (doors, windows and their coverings).
bool is_opening_related(const std::string& name);

// Deterministic engineer entry for one instance, mapping the statement
// directly. Used to author fixtures and as a reference in tests.
nlohmann::json draft_entry(const ObjectProposal& proposal, const PlacementStatement& statement,
                           const std::vector<Instance>& instances);

std::vector<ObjectProposal> run_designer(const DesignRequest& request, GenerationBackend& backend,
                                         const AgentOptions& options = {}, StageTranscript* transcript = nullptr);

// One statement per instance, in expand_instances order.
std::vector<PlacementStatement> run_architect(const std::vector<ObjectProposal>& proposals, const DesignRequest& request,
                                              GenerationBackend& backend, const AgentOptions& options = {},
                                              StageTranscript* transcript = nullptr);

// One engineer call per instance, up to `parallelism` at a time. Instances
// that never validate are dropped along with edges that reference them.
SceneGraph run_engineer(const std::vector<ObjectProposal>& proposals, const std::vector<PlacementStatement>& statements,
                        const Room& room, GenerationBackend& backend, const AgentOptions& options = {},
                        int parallelism = 1, StageTranscript* transcript = nullptr);

struct PipelineOptions {
  AgentOptions designer;
  AgentOptions architect;
  AgentOptions engineer;
  AgentOptions corrector;
  AgentOptions refiner;
  int engineer_parallelism = 1;
};

struct PipelineResult {
  SceneGraph graph;
  std::vector<Violation> violations;  // found in the engineer's graph
  std::vector<StageTranscript> transcripts;  // designer, architect, engineer, corrector, refiner
};

// Backend errors propagate; `partial` (when given) keeps the transcripts of
// the stages that finished.
PipelineResult run_pipeline(const DesignRequest& request, GenerationBackend& backend,
                            const PipelineOptions& options = {}, PipelineResult* partial = nullptr);

}  // namespace roomgraph
