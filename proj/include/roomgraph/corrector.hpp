#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/backend.hpp"
#include "roomgraph/scene.hpp"
#include "roomgraph/transcript.hpp"

namespace roomgraph {

enum class ViolationKind { kOutOfBounds, kAdjacencyConflict, kSizeIncompatibility, kOrphan };

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string subject;
  // OutOfBounds: [parent, wall...]; AdjacencyConflict: [A, B] of the
  // interposed edge A -> B; SizeIncompatibility: the crowded children in id
  // order; Orphan: empty.
  std::vector<std::string> context;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Detection is structural and tolerant of cycles and unknown endpoints.
// Results are sorted by (kind, subject, context).
std::vector<Violation> detect_violations(const SceneGraph& graph);

nlohmann::json violations_to_json(const std::vector<Violation>& violations);
// Throws Error(kParseError).
std::vector<Violation> violations_from_json(const nlohmann::json& j);

struct AgentOptions {
  int max_retries = 3;
  DecodingParams decoding;
  std::string system_prompt;  // empty: the embedded default for the stage
};

// Fixes every violation, asking the backend (when given) for a replacement
// placement of the subject and falling back to the deterministic rules when
// the reply is unusable. Re-detects until clean; nodes that keep failing are
// removed and noted in the transcript.
SceneGraph resolve_violations(SceneGraph graph, const std::vector<Violation>& violations,
                              GenerationBackend* backend = nullptr, const AgentOptions& options = {},
                              StageTranscript* transcript = nullptr);

// Deterministic fallback for a single violation. Returns false when the rule
// does not apply to the current graph.
bool apply_fallback(SceneGraph& graph, const Violation& violation, std::vector<std::string>* notes = nullptr);

// Heading along which siblings of a (parent, preposition) group are chained.
Heading sibling_axis(const ObjectNode& parent, Preposition preposition);

// Strict order of a sibling group along sibling_axis induced by the lateral
// edges among the siblings, or nullopt when it is not total.
std::optional<std::vector<std::string>> induced_sibling_order(const SceneGraph& graph, const std::string& parent,
                                                              Preposition preposition);

// Adds ordering edges so every object parent's same-preposition children
// form a total order along the parent's free axis.
SceneGraph refine_siblings(SceneGraph graph, GenerationBackend* backend = nullptr, const AgentOptions& options = {},
                           StageTranscript* transcript = nullptr);

// Removes the fewest edges that make the graph acyclic, preferring the most
// recently added (highest index) ones. Removed edges are appended to removed.
SceneGraph break_cycles(SceneGraph graph, std::vector<Edge>* removed = nullptr);

// resolve_violations, refine_siblings and break_cycles, repeated until the
// graph validates clean with no violations (bounded; the last round removes
// nodes if it has to).
SceneGraph correct_graph(SceneGraph graph, GenerationBackend* backend = nullptr, const AgentOptions& corrector = {},
                         const AgentOptions& refiner = {}, StageTranscript* corrector_transcript = nullptr,
                         StageTranscript* refiner_transcript = nullptr);

}  // namespace roomgraph
