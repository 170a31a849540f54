#include "roomgraph/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include "roomgraph/error.hpp"

namespace roomgraph {

std::string_view to_string(GraphErrorKind kind) {
  switch (kind) {
    case GraphErrorKind::kInvalidRoom: return "InvalidRoom";
    case GraphErrorKind::kDuplicateNodeId: return "DuplicateNodeId";
    case GraphErrorKind::kReservedNodeId: return "ReservedNodeId";
    case GraphErrorKind::kNonPositiveSize: return "NonPositiveSize";
    case GraphErrorKind::kClusterExtentTooSmall: return "ClusterExtentTooSmall";
    case GraphErrorKind::kUnknownEndpoint: return "UnknownEndpoint";
    case GraphErrorKind::kSelfLoop: return "SelfLoop";
    case GraphErrorKind::kLayoutNodeAsChild: return "LayoutNodeAsChild";
    case GraphErrorKind::kInvalidLayoutPreposition: return "InvalidLayoutPreposition";
    case GraphErrorKind::kInvalidObjectPreposition: return "InvalidObjectPreposition";
    case GraphErrorKind::kCornerNeedsWall: return "CornerNeedsWall";
    case GraphErrorKind::kDuplicateEdge: return "DuplicateEdge";
    case GraphErrorKind::kCycleDetected: return "CycleDetected";
  }
  return "Unknown";
}

namespace {

// Adjacency over object nodes only; edges touching unknown ids are skipped.
struct ObjectDigraph {
  std::vector<std::string> ids;  // sorted
  std::map<std::string, int> index;
  std::vector<std::vector<int>> out;

  explicit ObjectDigraph(const SceneGraph& g) {
    for (const ObjectNode& n : g.nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) index[ids[i]] = i;
    out.resize(ids.size());
    for (const Edge& e : g.edges) {
      auto p = index.find(e.parent);
      auto c = index.find(e.child);
      if (p == index.end() || c == index.end()) continue;
      out[p->second].push_back(c->second);
    }
    for (auto& v : out) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }
};

}  // namespace

std::vector<std::vector<std::string>> find_cycles(const SceneGraph& graph) {
  ObjectDigraph dg(graph);
  const int n = static_cast<int>(dg.ids.size());
  std::vector<int> idx(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int counter = 0;
  std::vector<std::vector<std::string>> result;

  std::function<void(int)> strong = [&](int v) {
    idx[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : dg.out[v]) {
      if (idx[w] < 0) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], idx[w]);
      }
    }
    if (low[v] == idx[v]) {
      std::vector<std::string> comp;
      int w = -1;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(dg.ids[w]);
      } while (w != v);
      if (comp.size() > 1) {
        std::sort(comp.begin(), comp.end());
        result.push_back(std::move(comp));
      }
    }
  };
  for (int v = 0; v < n; ++v) {
    if (idx[v] < 0) strong(v);
  }
  std::sort(result.begin(), result.end());
  return result;
}

ValidationReport validate_graph(const SceneGraph& graph) {
  ValidationReport report;
  if (!graph.room.valid()) {
    report.push_back({GraphErrorKind::kInvalidRoom, {}, -1, "room dimensions must be strictly positive"});
  }

  std::set<std::string> seen;
  for (const ObjectNode& n : graph.nodes) {
    if (is_layout_id(n.id)) {
      report.push_back({GraphErrorKind::kReservedNodeId, {n.id}, -1, "object id collides with a layout node"});
    }
    if (!seen.insert(n.id).second) {
      report.push_back({GraphErrorKind::kDuplicateNodeId, {n.id}, -1, "duplicate node id"});
    }
    if (!(n.size.x > 0 && n.size.y > 0 && n.size.z > 0)) {
      report.push_back({GraphErrorKind::kNonPositiveSize, {n.id}, -1, "size components must be positive"});
    }
    if (n.cluster_extents) {
      const Extents4& cs = *n.cluster_extents;
      const double hx = n.size.x / 2, hy = n.size.y / 2, eps = 1e-9;
      if (cs.x_neg < hx - eps || cs.x_pos < hx - eps || cs.y_neg < hy - eps || cs.y_pos < hy - eps) {
        report.push_back({GraphErrorKind::kClusterExtentTooSmall, {n.id}, -1,
                          "cluster extents must cover the object's own half-extents"});
      }
    }
  }

  std::set<std::tuple<std::string, std::string, Preposition>> edge_keys;
  for (int i = 0; i < static_cast<int>(graph.edges.size()); ++i) {
    const Edge& e = graph.edges[i];
    const bool parent_known = graph.has_node(e.parent);
    const bool child_known = graph.has_node(e.child);
    if (!parent_known || !child_known) {
      std::vector<std::string> bad;
      if (!parent_known) bad.push_back(e.parent);
      if (!child_known) bad.push_back(e.child);
      report.push_back({GraphErrorKind::kUnknownEndpoint, bad, i, "edge endpoint does not exist"});
      continue;
    }
    if (e.parent == e.child) {
      report.push_back({GraphErrorKind::kSelfLoop, {e.parent}, i, "edge parent equals child"});
      continue;
    }
    if (is_layout_id(e.child)) {
      report.push_back({GraphErrorKind::kLayoutNodeAsChild, {e.child}, i, "layout nodes cannot be children"});
      continue;
    }
    if (auto layout = layout_node_from_id(e.parent)) {
      if (!allowed_from_layout(e.preposition)) {
        report.push_back({GraphErrorKind::kInvalidLayoutPreposition, {e.parent, e.child}, i,
                          "layout parents only accept on / in_the_corner, got " +
                              std::string(to_string(e.preposition))});
      } else if (e.preposition == Preposition::kInTheCorner && !is_wall(*layout)) {
        report.push_back({GraphErrorKind::kCornerNeedsWall, {e.parent, e.child}, i,
                          "in_the_corner requires a wall parent"});
      }
    } else if (!allowed_between_objects(e.preposition)) {
      report.push_back({GraphErrorKind::kInvalidObjectPreposition, {e.parent, e.child}, i,
                        "object parents do not accept " + std::string(to_string(e.preposition))});
    }
    if (!edge_keys.insert({e.parent, e.child, e.preposition}).second) {
      report.push_back({GraphErrorKind::kDuplicateEdge, {e.parent, e.child}, i, "duplicate edge"});
    }
  }

  for (auto& cycle : find_cycles(graph)) {
    std::string msg = "cycle among";
    for (const auto& id : cycle) msg += " " + id;
    report.push_back({GraphErrorKind::kCycleDetected, cycle, -1, msg});
  }
  return report;
}

std::vector<std::string> topological_order(const SceneGraph& graph) {
  std::vector<std::string> order;
  for (LayoutNode n : kLayoutNodes) order.emplace_back(layout_node_id(n));

  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> children;
  for (const ObjectNode& n : graph.nodes) indegree[n.id] = 0;
  for (const Edge& e : graph.edges) {
    if (is_layout_id(e.child)) {
      throw Error(ErrorCode::kInvalidArgument, "edge into layout node " + e.child);
    }
    if (!indegree.count(e.child) || !graph.has_node(e.parent)) {
      throw Error(ErrorCode::kInvalidArgument, "edge with unknown endpoint " + e.parent + " -> " + e.child);
    }
    if (is_layout_id(e.parent)) continue;
    indegree[e.child]++;
    children[e.parent].push_back(e.child);
  }

  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.push(id);
  }
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const std::string& c : children[id]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != kLayoutNodes.size() + indegree.size()) {
    throw Error(ErrorCode::kCyclicGraph, "scene graph contains a cycle");
  }
  return order;
}

std::map<std::string, int> depth_map(const SceneGraph& graph) {
  std::map<std::string, int> depth;
  std::deque<std::string> queue;
  for (LayoutNode n : kLayoutNodes) {
    depth[std::string(layout_node_id(n))] = 0;
    queue.emplace_back(layout_node_id(n));
  }
  std::map<std::string, std::vector<std::string>> children;
  for (const Edge& e : graph.edges) children[e.parent].push_back(e.child);
  while (!queue.empty()) {
    std::string id = queue.front();
    queue.pop_front();
    for (const std::string& c : children[id]) {
      if (!depth.count(c)) {
        depth[c] = depth[id] + 1;
        queue.push_back(c);
      }
    }
  }
  return depth;
}

int depth_of(const SceneGraph& graph, const std::string& node) {
  if (is_layout_id(node)) return 0;
  if (!graph.find(node)) throw Error(ErrorCode::kInvalidArgument, "unknown node " + node);
  auto depths = depth_map(graph);
  auto it = depths.find(node);
  if (it == depths.end()) throw Error(ErrorCode::kUnreachable, "no layout node reaches " + node);
  return it->second;
}

std::vector<std::string> unreachable_objects(const SceneGraph& graph) {
  auto depths = depth_map(graph);
  std::vector<std::string> out;
  for (const ObjectNode& n : graph.nodes) {
    if (!depths.count(n.id)) out.push_back(n.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LayoutNode> corner_walls(const SceneGraph& graph, std::string_view node) {
  std::vector<LayoutNode> walls;
  std::vector<LayoutNode> on_walls;
  for (const Edge* e : graph.in_edges(node)) {
    auto layout = layout_node_from_id(e->parent);
    if (!layout || !is_wall(*layout)) continue;
    if (e->preposition == Preposition::kInTheCorner) {
      if (std::find(walls.begin(), walls.end(), *layout) == walls.end()) walls.push_back(*layout);
    } else if (e->preposition == Preposition::kOn) {
      on_walls.push_back(*layout);
    }
  }
  if (walls.size() != 1) return walls;
  const int axis = axis_of(wall_outward(walls[0]));
  for (LayoutNode w : on_walls) {
    if (axis_of(wall_outward(w)) != axis) {
      walls.push_back(w);
      return walls;
    }
  }
  walls.push_back(axis == 1 ? LayoutNode::kWallWest : LayoutNode::kWallSouth);
  return walls;
}

std::vector<LayoutNode> flush_walls(const SceneGraph& graph, std::string_view node) {
  std::vector<LayoutNode> walls = corner_walls(graph, node);
  for (const Edge* e : graph.in_edges(node)) {
    auto layout = layout_node_from_id(e->parent);
    if (!layout || !is_wall(*layout)) continue;
    if (e->preposition == Preposition::kOn && e->adjacency == Adjacency::kAdjacent &&
        std::find(walls.begin(), walls.end(), *layout) == walls.end()) {
      walls.push_back(*layout);
    }
  }
  return walls;
}

bool is_floor_standing(const SceneGraph& graph, std::string_view node) {
  for (const Edge* e : graph.in_edges(node)) {
    if (e->preposition == Preposition::kInTheCorner) return true;
    if (e->parent == layout_node_id(LayoutNode::kFloor) || e->parent == layout_node_id(LayoutNode::kMiddleOfRoom)) {
      return true;
    }
  }
  return false;
}

void apply_default_rotations(SceneGraph& graph) {
  for (const std::string& id : topological_order(graph)) {
    ObjectNode* node = graph.find(id);
    if (!node || node->facing_given) continue;
    for (const Edge* e : graph.in_edges(id)) {
      if (e->preposition != Preposition::kOn && e->preposition != Preposition::kUnder) continue;
      if (const ObjectNode* parent = graph.find(e->parent)) {
        node->rotation = parent->rotation;
        break;
      }
    }
  }
}

}  // namespace roomgraph
