#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "roomgraph/scene.hpp"

namespace roomgraph {

enum class GraphErrorKind {
  kInvalidRoom,
  kDuplicateNodeId,
  kReservedNodeId,
  kNonPositiveSize,
  kClusterExtentTooSmall,
  kUnknownEndpoint,
  kSelfLoop,
  kLayoutNodeAsChild,
  kInvalidLayoutPreposition,
  kInvalidObjectPreposition,
  kCornerNeedsWall,
  kDuplicateEdge,
  kCycleDetected,
};

std::string_view to_string(GraphErrorKind kind);

struct GraphError {
  GraphErrorKind kind;
  std::vector<std::string> nodes;  // offending node ids (sorted for cycles)
  int edge_index = -1;             // offending edge, when applicable
  std::string message;

  friend bool operator==(const GraphError&, const GraphError&) = default;
};

using ValidationReport = std::vector<GraphError>;

ValidationReport validate_graph(const SceneGraph& graph);

// Layout node ids first (fixed order), then objects; ties broken by ascending id.
// Throws Error(kCyclicGraph).
std::vector<std::string> topological_order(const SceneGraph& graph);

// Minimum edge count from any layout node; layout nodes have depth 0.
// Throws Error(kUnreachable).
int depth_of(const SceneGraph& graph, const std::string& node);

// Node-id sets of every strongly connected component that contains a cycle.
std::vector<std::vector<std::string>> find_cycles(const SceneGraph& graph);

// Object ids not reachable from any layout node.
std::vector<std::string> unreachable_objects(const SceneGraph& graph);

// depth_of for every reachable node, layout nodes included.
std::map<std::string, int> depth_map(const SceneGraph& graph);

// Walls of the corner a node sits in. A single in_the_corner wall is paired
// with a perpendicular wall the node is also "on"; failing that, with the
// wall at the lower-coordinate end of the named wall (west for north/south,
// south for east/west).
std::vector<LayoutNode> corner_walls(const SceneGraph& graph, std::string_view node);

// Walls a node touches: adjacent "on" wall edges plus its corner walls.
std::vector<LayoutNode> flush_walls(const SceneGraph& graph, std::string_view node);

// True when the node stands on the floor: it has a floor, middle_of_room or
// corner edge.
bool is_floor_standing(const SceneGraph& graph, std::string_view node);

// Nodes without a given facing take the rotation of their first on/under
// object parent. Requires an acyclic graph.
void apply_default_rotations(SceneGraph& graph);

}  // namespace roomgraph
