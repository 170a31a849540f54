#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/graph.hpp"
#include "roomgraph/scene.hpp"

namespace roomgraph {

nlohmann::json room_to_json(const Room& room);
Room room_from_json(const nlohmann::json& j);

// One engineer entry (new_object_id, name, style, material, size_in_meters,
// scene_graph, facing, plus optional rotation/position/cluster_extents).
nlohmann::json node_to_entry(const ObjectNode& node, const std::vector<Edge>& in_edges);

struct ParsedEntry {
  ObjectNode node;
  std::vector<Edge> edges;
};
// Throws Error(kParseError) when the entry is not a valid engineer entry.
ParsedEntry entry_from_json(const nlohmann::json& entry);

// Scene-graph document: {"room": {...}, "objects": [entry...]}. Edges are
// stored on their child's entry, in node order.
nlohmann::json graph_to_document(const SceneGraph& graph);
// Validates against schemas/scene_graph.schema.json. Throws Error(kParseError).
SceneGraph graph_from_document(const nlohmann::json& doc);

std::vector<std::string> engineer_entry_errors(const nlohmann::json& entry);
std::vector<std::string> scene_document_errors(const nlohmann::json& doc);

nlohmann::json validation_report_to_json(const ValidationReport& report);

}  // namespace roomgraph
