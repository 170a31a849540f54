#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/agents.hpp"
#include "roomgraph/backend.hpp"
#include "roomgraph/retrieval.hpp"

namespace roomgraph::testing {

// A request plus the replies a well-behaved model would give it.
struct DesignScript {
  DesignRequest request;
  std::vector<ObjectProposal> proposals;
  std::vector<PlacementStatement> statements;  // expand_instances order
};

// Study: desk on the north wall, chair, lamp, two bookshelves, rug.
DesignScript study_script();
// Bedroom: bed, two nightstands, wardrobe, lamp.
DesignScript bedroom_script();

// Architect reply grouping the statements by proposal, spaced prepositions.
nlohmann::json architect_reply(const DesignScript& script);

// Designer and architect replies from the script, engineer replies from
// draft_entry, and "{}" for corrector and refiner so their fallbacks run.
ScriptedBackend::Responder script_responder(DesignScript script);

// Small asset index covering the study and bedroom objects, plus the table
// embedder entries for their descriptions. Dimension 8.
std::vector<AssetRecord> script_asset_records();
std::map<std::string, std::vector<double>> script_embedding_table();

struct PlanRect {
  std::string id;
  std::vector<std::pair<double, double>> corners;  // meters, world frame
};
// Object rectangles read back from render_floor_plan output.
std::vector<PlanRect> parse_floor_plan(const std::string& svg);

}  // namespace roomgraph::testing
