#include "roomgraph/corrector.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <tuple>

#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/prompts.hpp"
#include "roomgraph/scene_io.hpp"

namespace roomgraph {

using nlohmann::json;

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kOutOfBounds: return "OutOfBounds";
    case ViolationKind::kAdjacencyConflict: return "AdjacencyConflict";
    case ViolationKind::kSizeIncompatibility: return "SizeIncompatibility";
    case ViolationKind::kOrphan: return "Orphan";
  }
  return "Unknown";
}

json violations_to_json(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const Violation& v : violations) {
    out.push_back({{"kind", std::string(to_string(v.kind))},
                   {"subject", v.subject},
                   {"context", v.context},
                   {"message", v.message}});
  }
  return out;
}

std::vector<Violation> violations_from_json(const json& j) {
  std::vector<Violation> out;
  try {
    for (const json& v : j) {
      const std::string kind = v.at("kind").get<std::string>();
      Violation x{ViolationKind::kOrphan, v.at("subject").get<std::string>(),
                  v.at("context").get<std::vector<std::string>>(), v.at("message").get<std::string>()};
      bool known = false;
      for (ViolationKind k : {ViolationKind::kOutOfBounds, ViolationKind::kAdjacencyConflict,
                              ViolationKind::kSizeIncompatibility, ViolationKind::kOrphan}) {
        if (to_string(k) == kind) {
          x.kind = k;
          known = true;
        }
      }
      if (!known) throw Error(ErrorCode::kParseError, "unknown violation kind " + kind);
      out.push_back(std::move(x));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return out;
}

namespace {

constexpr double kEps = 1e-9;

// Rotation a node ends up with once defaults are applied; cycle safe.
Rotation effective_rotation(const SceneGraph& g, const std::string& id, int budget = 64) {
  const ObjectNode* n = g.find(id);
  if (!n) return Rotation::k0;
  if (n->facing_given || budget == 0) return n->rotation;
  for (const Edge* e : g.in_edges(id)) {
    if (e->preposition != Preposition::kOn && e->preposition != Preposition::kUnder) continue;
    if (g.find(e->parent)) return effective_rotation(g, e->parent, budget - 1);
  }
  return n->rotation;
}

Vec3 effective_half(const SceneGraph& g, const ObjectNode& n) {
  return world_half_extents(n.size, effective_rotation(g, n.id));
}

// Direction of the child as seen from the parent: 0..3 are Heading values,
// 4 is up and 5 is down.
enum Dir6 : int { kUp = 4, kDown = 5 };

std::optional<int> edge_direction(const SceneGraph& g, const Edge& e) {
  if (auto layout = layout_node_from_id(e.parent)) {
    if (e.preposition != Preposition::kOn) return std::nullopt;
    if (*layout == LayoutNode::kCeiling) return kDown;
    if (is_wall(*layout)) return static_cast<int>(opposite(wall_outward(*layout)));
    return kUp;
  }
  if (!g.find(e.parent)) return std::nullopt;
  switch (e.preposition) {
    case Preposition::kOn:
    case Preposition::kAbove: return kUp;
    case Preposition::kUnder: return kDown;
    case Preposition::kInTheCorner: return std::nullopt;
    default:
      return static_cast<int>(to_world(lateral_direction(e.preposition), effective_rotation(g, e.parent)));
  }
}

// Edges whose adjacency flag means contact along their direction.
bool honors_adjacency(const Edge& e) {
  return e.preposition == Preposition::kOn || (is_lateral(e.preposition) && !is_layout_id(e.parent));
}

std::string wall_name(LayoutNode w) { return std::string(layout_node_id(w)); }

void detect_out_of_bounds(const SceneGraph& g, std::vector<Violation>& out) {
  for (const Edge& e : g.edges) {
    if (!is_lateral(e.preposition) || !g.find(e.parent) || !g.find(e.child)) continue;
    const Heading h = to_world(lateral_direction(e.preposition), effective_rotation(g, e.parent));
    for (LayoutNode w : flush_walls(g, e.parent)) {
      if (wall_outward(w) != h) continue;
      out.push_back({ViolationKind::kOutOfBounds, e.child, {e.parent, wall_name(w)},
                     e.child + " is " + std::string(to_string(e.preposition)) + " " + e.parent + ", which is flush against " +
                         wall_name(w) + "; that side is outside the room"});
    }
  }
}

void detect_adjacency_conflicts(const SceneGraph& g, std::vector<Violation>& out) {
  std::map<std::string, std::vector<const Edge*>> by_parent;
  for (const Edge& e : g.edges) by_parent[e.parent].push_back(&e);
  for (const Edge& ab : g.edges) {
    if (ab.adjacency != Adjacency::kAdjacent || !honors_adjacency(ab) || !g.find(ab.child)) continue;
    const auto d = edge_direction(g, ab);
    if (!d) continue;
    for (const Edge* ac : by_parent[ab.parent]) {
      if (ac->child == ab.child || !g.find(ac->child) || edge_direction(g, *ac) != d) continue;
      for (const Edge* cb : by_parent[ac->child]) {
        if (cb->child != ab.child || edge_direction(g, *cb) != d) continue;
        out.push_back({ViolationKind::kAdjacencyConflict, ac->child, {ab.parent, ab.child},
                       ac->child + " sits between " + ab.parent + " and " + ab.child + ", which are declared adjacent"});
        break;
      }
    }
  }
}

void add_size(std::vector<Violation>& out, const std::string& parent, std::vector<std::string> children,
              const std::string& why) {
  std::sort(children.begin(), children.end());
  out.push_back({ViolationKind::kSizeIncompatibility, parent, std::move(children), why});
}

std::string meters(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f m", v);
  return buf;
}

void detect_size(const SceneGraph& g, std::vector<Violation>& out) {
  // Object parents.
  for (const ObjectNode& p : g.nodes) {
    const Vec3 ph = effective_half(g, p);
    const Rotation pr = effective_rotation(g, p.id);
    std::map<Preposition, std::vector<const ObjectNode*>> groups;
    for (const Edge* e : g.out_edges(p.id)) {
      const ObjectNode* c = g.find(e->child);
      if (!c) continue;
      groups[e->preposition].push_back(c);
      const Vec3 ch = effective_half(g, *c);
      if (e->preposition == Preposition::kOn || e->preposition == Preposition::kUnder) {
        if (ch.x > ph.x + kEps || ch.y > ph.y + kEps) {
          add_size(out, p.id, {c->id}, c->id + " is larger than the footprint of " + p.id);
        }
      }
      if (e->preposition == Preposition::kUnder && is_floor_standing(g, p.id)) {
        add_size(out, p.id, {c->id}, c->id + " cannot fit under " + p.id + ", which stands on the floor");
      }
    }
    for (auto& [prep, children] : groups) {
      if (prep == Preposition::kAbove) continue;
      int axis;
      std::vector<const ObjectNode*> members;
      if (is_lateral(prep)) {
        axis = 1 - axis_of(to_world(lateral_direction(prep), pr));
        members = children;
      } else {
        axis = axis_of(right_heading(pr));
        for (const ObjectNode* c : children) {
          bool adjacent = prep == Preposition::kUnder;
          for (const Edge* e : g.in_edges(c->id)) {
            if (e->parent == p.id && e->preposition == prep && e->adjacency == Adjacency::kAdjacent) adjacent = true;
          }
          if (adjacent) members.push_back(c);
        }
      }
      if (members.size() < 2) continue;
      double need = 0.0;
      std::vector<std::string> ids;
      for (const ObjectNode* c : members) {
        need += 2.0 * effective_half(g, *c)[axis];
        ids.push_back(c->id);
      }
      const double have = 2.0 * ph[axis];
      if (need > have + kEps) {
        add_size(out, p.id, ids,
                 "children " + std::string(to_string(prep)) + " " + p.id + " need " + meters(need) + " but the face is " +
                     meters(have));
      }
    }
  }
  // Corners hold one object each.
  std::map<std::vector<LayoutNode>, std::vector<std::pair<std::string, std::string>>> corners;
  for (const Edge& e : g.edges) {
    if (e.preposition != Preposition::kInTheCorner || !g.find(e.child) || !is_layout_id(e.parent)) continue;
    std::vector<LayoutNode> key = corner_walls(g, e.child);
    std::sort(key.begin(), key.end());
    auto& members = corners[key];
    if (std::none_of(members.begin(), members.end(), [&](const auto& m) { return m.first == e.child; })) {
      members.push_back({e.child, e.parent});
    }
  }
  for (auto& [key, members] : corners) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    std::vector<std::string> ids;
    for (const auto& m : members) ids.push_back(m.first);
    add_size(out, members.back().second, ids, "objects share the corner of " + members.back().second);
  }
  // Walls.
  for (LayoutNode w : kLayoutNodes) {
    if (!is_wall(w)) continue;
    const std::string wid = wall_name(w);
    const int axis = 1 - axis_of(wall_outward(w));
    const double length = axis == 0 ? g.room.width_x : g.room.depth_y;
    std::vector<std::string> standing;
    double need = 0.0;
    for (const ObjectNode& c : g.nodes) {
      const auto walls = flush_walls(g, c.id);
      if (std::find(walls.begin(), walls.end(), w) == walls.end()) continue;
      const Vec3 ch = effective_half(g, c);
      if (is_floor_standing(g, c.id)) {
        standing.push_back(c.id);
        need += 2.0 * ch[axis];
      } else if (2.0 * ch[axis] > length + kEps || 2.0 * ch.z > g.room.height_z + kEps) {
        add_size(out, wid, {c.id}, c.id + " does not fit on " + wid);
      }
    }
    if (!standing.empty() && need > length + kEps) {
      add_size(out, wid, standing, "objects along " + wid + " need " + meters(need) + " but the wall is " + meters(length));
    }
  }
}

bool violation_less(const Violation& a, const Violation& b) {
  return std::tie(a.kind, a.subject, a.context) < std::tie(b.kind, b.subject, b.context);
}

bool same_violation(const Violation& a, const Violation& b) {
  return a.kind == b.kind && a.subject == b.subject && a.context == b.context;
}

}  // namespace

std::vector<Violation> detect_violations(const SceneGraph& graph) {
  std::vector<Violation> out;
  detect_out_of_bounds(graph, out);
  detect_adjacency_conflicts(graph, out);
  detect_size(graph, out);
  for (const std::string& id : unreachable_objects(graph)) {
    out.push_back({ViolationKind::kOrphan, id, {}, id + " is not reachable from the floor, walls or ceiling"});
  }
  std::sort(out.begin(), out.end(), violation_less);
  out.erase(std::unique(out.begin(), out.end(), same_violation), out.end());
  return out;
}

namespace {

bool has_edge(const SceneGraph& g, const std::string& parent, const std::string& child, Preposition p) {
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const Edge& e) {
    return e.parent == parent && e.child == child && e.preposition == p;
  });
}

void note(std::vector<std::string>* notes, const std::string& text) {
  if (notes) notes->push_back(text);
}

std::string describe(const Edge& e) {
  return "(" + e.parent + ", " + e.child + ", " + std::string(to_string(e.preposition)) + ", " +
         std::string(to_string(e.adjacency)) + ")";
}

LocalDir rotate_cw(LocalDir d) {
  switch (d) {
    case LocalDir::kFront: return LocalDir::kRight;
    case LocalDir::kRight: return LocalDir::kBack;
    case LocalDir::kBack: return LocalDir::kLeft;
    case LocalDir::kLeft: return LocalDir::kFront;
  }
  return d;
}

bool fix_out_of_bounds(SceneGraph& g, const Violation& v, std::vector<std::string>* notes) {
  if (v.context.size() < 2) return false;
  const std::string& parent = v.context[0];
  std::set<Heading> blocked;
  for (LayoutNode w : flush_walls(g, parent)) blocked.insert(wall_outward(w));
  const Rotation pr = effective_rotation(g, parent);
  for (Edge& e : g.edges) {
    if (e.parent != parent || e.child != v.subject || !is_lateral(e.preposition)) continue;
    const LocalDir d = lateral_direction(e.preposition);
    if (!blocked.count(to_world(d, pr))) continue;
    const LocalDir cw = rotate_cw(d);
    const LocalDir back = rotate_cw(cw);
    for (LocalDir cand : {cw, rotate_cw(back), back}) {
      const Preposition np = *lateral_preposition(cand);
      if (blocked.count(to_world(cand, pr)) || has_edge(g, parent, v.subject, np)) continue;
      const std::string before = describe(e);
      e.preposition = np;
      note(notes, "fallback: OutOfBounds " + before + " -> " + describe(e));
      return true;
    }
  }
  return false;
}

bool fix_adjacency(SceneGraph& g, const Violation& v, std::vector<std::string>* notes) {
  if (v.context.size() < 2) return false;
  for (Edge& e : g.edges) {
    if (e.parent == v.context[0] && e.child == v.context[1] && e.adjacency == Adjacency::kAdjacent &&
        honors_adjacency(e)) {
      const std::string before = describe(e);
      e.adjacency = Adjacency::kNotAdjacent;
      note(notes, "fallback: AdjacencyConflict " + before + " -> " + describe(e));
      return true;
    }
  }
  return false;
}

Edge reattachment(const SceneGraph& g, const std::string& old_parent, const std::string& child) {
  const std::string middle(layout_node_id(LayoutNode::kMiddleOfRoom));
  if (is_layout_id(old_parent)) return {middle, child, Preposition::kOn, Adjacency::kAdjacent};
  std::vector<const Edge*> in = g.in_edges(old_parent);
  for (const Edge* e : in) {
    if (g.find(e->parent) && e->parent != child) return {e->parent, child, Preposition::kOn, Adjacency::kAdjacent};
  }
  for (const Edge* e : in) {
    if (e->parent == layout_node_id(LayoutNode::kFloor) || e->parent == middle) {
      return {e->parent, child, Preposition::kOn, Adjacency::kAdjacent};
    }
  }
  for (const Edge* e : in) {
    if (is_layout_id(e->parent)) return {e->parent, child, Preposition::kOn, Adjacency::kAdjacent};
  }
  return {middle, child, Preposition::kOn, Adjacency::kAdjacent};
}

bool fix_size(SceneGraph& g, const Violation& v, std::vector<std::string>* notes) {
  if (v.context.empty()) return false;
  const std::string& parent = v.subject;
  const std::string& child = v.context.back();
  const auto before = g.edges.size();
  const auto wall = layout_node_from_id(parent);
  const bool from_wall = wall && is_wall(*wall);
  std::erase_if(g.edges, [&](const Edge& e) {
    if (e.child != child) return false;
    // A wall also holds objects cornered against it from a neighbouring wall.
    const auto p = layout_node_from_id(e.parent);
    const bool wall_edge = from_wall && p && is_wall(*p) &&
                           (e.preposition == Preposition::kInTheCorner || e.parent == parent);
    if (e.parent != parent && !wall_edge) return false;
    note(notes, "fallback: SizeIncompatibility dropped " + describe(e));
    return true;
  });
  if (g.edges.size() == before) return false;
  if (g.in_edges(child).empty()) {
    Edge e = reattachment(g, parent, child);
    note(notes, "fallback: SizeIncompatibility reattached " + describe(e));
    g.edges.push_back(std::move(e));
  }
  return true;
}

bool fix_orphan(SceneGraph& g, const Violation& v, std::vector<std::string>* notes) {
  if (!g.find(v.subject)) return false;
  Edge e{std::string(layout_node_id(LayoutNode::kMiddleOfRoom)), v.subject, Preposition::kOn, Adjacency::kAdjacent};
  if (has_edge(g, e.parent, e.child, e.preposition)) return false;
  note(notes, "fallback: Orphan attached " + describe(e));
  g.edges.push_back(std::move(e));
  return true;
}

void remove_node(SceneGraph& g, const std::string& id) {
  std::erase_if(g.nodes, [&](const ObjectNode& n) { return n.id == id; });
  std::erase_if(g.edges, [&](const Edge& e) { return e.parent == id || e.child == id; });
}

// The object the backend is asked to re-place for a violation.
std::string target_of(const Violation& v) {
  if (v.kind == ViolationKind::kSizeIncompatibility && !v.context.empty()) return v.context.back();
  return v.subject;
}

std::string resolve_system_prompt(const AgentOptions& options, std::string_view stage) {
  return options.system_prompt.empty() ? default_system_prompt(stage) : options.system_prompt;
}

// Applies a corrector reply to a copy of the graph; nullopt with reasons on failure.
std::optional<SceneGraph> apply_correction(const SceneGraph& g, const std::string& target, const json& reply,
                                           const Violation& v, std::vector<std::string>& errors) {
  errors = shipped_schema("corrector").validate(reply);
  if (!errors.empty()) return std::nullopt;
  if (reply["new_object_id"].get<std::string>() != target) {
    errors.push_back("/new_object_id: expected " + target);
    return std::nullopt;
  }
  SceneGraph out = g;
  if (reply.value("remove", false)) {
    remove_node(out, target);
    return out;
  }
  if (!reply.contains("scene_graph") || reply["scene_graph"].empty()) {
    errors.push_back("/scene_graph: give at least one placement or set remove to true");
    return std::nullopt;
  }
  std::erase_if(out.edges, [&](const Edge& e) { return e.child == target; });
  for (const json& p : reply["scene_graph"]) {
    out.edges.push_back({p["parent"].get<std::string>(), target, *parse_preposition(p["preposition"].get<std::string>()),
                         *parse_adjacency(p["adjacency"].get<std::string>())});
  }
  if (reply.contains("facing")) {
    ObjectNode* n = out.find(target);
    const std::string facing = reply["facing"].get<std::string>();
    if (facing == "none") {
      n->facing_given = false;
    } else {
      n->facing_given = true;
      n->rotation = *rotation_for_facing(facing);
    }
  }
  for (const GraphError& e : validate_graph(out)) errors.push_back(e.message);
  if (!errors.empty()) return std::nullopt;
  for (const Violation& still : detect_violations(out)) {
    if (still.kind == v.kind && (still.subject == v.subject || target_of(still) == target)) {
      errors.push_back("the placement still has the conflict: " + still.message);
      return std::nullopt;
    }
  }
  return out;
}

json room_summary(const SceneGraph& g) {
  json objects = json::array();
  for (const ObjectNode& n : g.nodes) objects.push_back(node_to_entry(n, [&] {
    std::vector<Edge> in;
    for (const Edge* e : g.in_edges(n.id)) in.push_back(*e);
    return in;
  }()));
  return {{"room", room_to_json(g.room)}, {"objects", std::move(objects)}};
}

bool try_backend_fix(SceneGraph& g, const Violation& v, GenerationBackend& backend, const AgentOptions& options,
                     StageTranscript* transcript) {
  const std::string target = target_of(v);
  const ObjectNode* node = g.find(target);
  if (!node) return false;
  std::vector<Edge> in;
  for (const Edge* e : g.in_edges(target)) in.push_back(*e);
  json message = {{"conflict", std::string(to_string(v.kind))},
                  {"description", v.message},
                  {"object", node_to_entry(*node, in)},
                  {"scene", room_summary(g)}};

  std::optional<SceneGraph> accepted;
  StructuredCall call;
  call.stage = "corrector";
  call.label = target;
  call.system_prompt = resolve_system_prompt(options, "corrector");
  call.user_message = message.dump(2);
  call.decoding = options.decoding;
  call.max_retries = options.max_retries;
  call.check = [&](const json& reply) {
    std::vector<std::string> errors;
    accepted = apply_correction(g, target, reply, v, errors);
    return errors;
  };
  StructuredResult r = call_structured(backend, call);
  if (transcript) {
    for (CallRecord& c : r.calls) transcript->calls.push_back(std::move(c));
    transcript->retry_count = std::max(transcript->retry_count, r.retries);
  }
  if (!r.value || !accepted) {
    if (transcript) transcript->notes.push_back("backend retries exhausted for " + target + "; using fallback");
    return false;
  }
  g = std::move(*accepted);
  if (transcript) transcript->notes.push_back("backend re-placed " + target);
  return true;
}

}  // namespace

bool apply_fallback(SceneGraph& graph, const Violation& violation, std::vector<std::string>* notes) {
  switch (violation.kind) {
    case ViolationKind::kOutOfBounds: return fix_out_of_bounds(graph, violation, notes);
    case ViolationKind::kAdjacencyConflict: return fix_adjacency(graph, violation, notes);
    case ViolationKind::kSizeIncompatibility: return fix_size(graph, violation, notes);
    case ViolationKind::kOrphan: return fix_orphan(graph, violation, notes);
  }
  return false;
}

SceneGraph resolve_violations(SceneGraph graph, const std::vector<Violation>& violations, GenerationBackend* backend,
                              const AgentOptions& options, StageTranscript* transcript) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> local_notes;
  std::vector<std::string>* notes = transcript ? &transcript->notes : &local_notes;
  if (transcript && transcript->stage.empty()) transcript->stage = "corrector";
  if (transcript && backend) transcript->system_prompt = resolve_system_prompt(options, "corrector");

  std::vector<Violation> pending = violations;
  if (pending.empty()) pending = detect_violations(graph);
  const int max_rounds = 4 * (static_cast<int>(graph.nodes.size()) + 1);
  for (int round = 0; !pending.empty(); ++round) {
    if (round >= max_rounds) {
      for (const Violation& v : pending) {
        const std::string victim = target_of(v);
        if (!graph.find(victim)) continue;
        notes->push_back("removed " + victim + " after repeated " + std::string(to_string(v.kind)) + " violations");
        remove_node(graph, victim);
        break;
      }
    } else {
      for (const Violation& v : pending) {
        const auto current = detect_violations(graph);
        if (std::none_of(current.begin(), current.end(), [&](const Violation& c) { return same_violation(c, v); })) {
          continue;
        }
        if (backend && try_backend_fix(graph, v, *backend, options, transcript)) continue;
        if (!apply_fallback(graph, v, notes)) {
          notes->push_back("no fallback applies to " + std::string(to_string(v.kind)) + " on " + v.subject);
        }
      }
    }
    pending = detect_violations(graph);
  }
  if (transcript) {
    transcript->output = {{"violations", violations_to_json(violations)}, {"graph", graph_to_document(graph)}};
    transcript->duration_ms +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return graph;
}

Heading sibling_axis(const ObjectNode& parent, Preposition preposition) {
  if (preposition == Preposition::kLeftOf || preposition == Preposition::kRightOf) {
    return forward_heading(parent.rotation);
  }
  return right_heading(parent.rotation);
}

namespace {

std::vector<std::string> group_children(const SceneGraph& g, const std::string& parent, Preposition p) {
  std::vector<std::string> out;
  for (const Edge* e : g.out_edges(parent)) {
    if (e->preposition == p && g.find(e->child)) out.push_back(e->child);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Pairs (before, after) along h implied by lateral edges inside the group.
std::set<std::pair<std::string, std::string>> group_relation(const SceneGraph& g, const std::set<std::string>& members,
                                                             Heading h) {
  std::set<std::pair<std::string, std::string>> rel;
  for (const Edge& e : g.edges) {
    if (!is_lateral(e.preposition) || !members.count(e.parent) || !members.count(e.child)) continue;
    const Heading d = to_world(lateral_direction(e.preposition), effective_rotation(g, e.parent));
    if (d == h) rel.insert({e.parent, e.child});
    if (d == opposite(h)) rel.insert({e.child, e.parent});
  }
  return rel;
}

// Kahn order with id tie-break; cycle members are appended by id.
std::vector<std::string> order_from(const std::vector<std::string>& members,
                                    const std::set<std::pair<std::string, std::string>>& rel, bool* unique) {
  std::map<std::string, int> indeg;
  for (const auto& m : members) indeg[m] = 0;
  for (const auto& [a, b] : rel) indeg[b]++;
  std::vector<std::string> order;
  std::set<std::string> ready;
  for (const auto& [m, d] : indeg) {
    if (d == 0) ready.insert(m);
  }
  bool single = true;
  while (!ready.empty()) {
    if (ready.size() > 1) single = false;
    const std::string m = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(m);
    for (const auto& [a, b] : rel) {
      if (a == m && --indeg[b] == 0) ready.insert(b);
    }
  }
  if (order.size() != members.size()) {
    single = false;
    for (const auto& m : members) {
      if (std::find(order.begin(), order.end(), m) == order.end()) order.push_back(m);
    }
  }
  if (unique) *unique = single;
  return order;
}

bool reaches(const SceneGraph& g, const std::string& from, const std::string& to) {
  std::set<std::string> seen{from};
  std::vector<std::string> stack{from};
  while (!stack.empty()) {
    const std::string cur = stack.back();
    stack.pop_back();
    if (cur == to) return true;
    for (const Edge* e : g.out_edges(cur)) {
      if (seen.insert(e->child).second) stack.push_back(e->child);
    }
  }
  return false;
}

void chain_group(SceneGraph& g, const std::string& parent, Preposition p, std::vector<std::string>* notes) {
  const ObjectNode& pn = *g.find(parent);
  ObjectNode effective = pn;
  effective.rotation = effective_rotation(g, parent);
  const Heading h = sibling_axis(effective, p);
  const std::vector<std::string> members = group_children(g, parent, p);
  const std::set<std::string> member_set(members.begin(), members.end());
  const auto rel = group_relation(g, member_set, h);
  const std::vector<std::string> order = order_from(members, rel, nullptr);
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;

  // Drop sibling edges off the chain axis or against the chosen order.
  std::erase_if(g.edges, [&](const Edge& e) {
    if (!is_lateral(e.preposition) || !member_set.count(e.parent) || !member_set.count(e.child)) return false;
    const Heading d = to_world(lateral_direction(e.preposition), effective_rotation(g, e.parent));
    bool keep = false;
    if (d == h) keep = pos[e.parent] < pos[e.child];
    if (d == opposite(h)) keep = pos[e.child] < pos[e.parent];
    if (!keep) note(notes, "refiner: dropped sibling edge " + describe(e));
    return !keep;
  });

  for (size_t i = 0; i + 1 < order.size(); ++i) {
    const std::string& a = order[i];
    const std::string& b = order[i + 1];
    if (group_relation(g, {a, b}, h).count({a, b})) continue;
    Edge e{a, b, *lateral_preposition(to_local(h, effective_rotation(g, a))), Adjacency::kAdjacent};
    if (reaches(g, b, a) && !reaches(g, a, b)) {
      e = {b, a, *lateral_preposition(to_local(opposite(h), effective_rotation(g, b))), Adjacency::kAdjacent};
    }
    note(notes, "refiner: added " + describe(e));
    g.edges.push_back(std::move(e));
  }
}

}  // namespace

std::optional<std::vector<std::string>> induced_sibling_order(const SceneGraph& graph, const std::string& parent,
                                                              Preposition preposition) {
  const ObjectNode* pn = graph.find(parent);
  if (!pn) return std::nullopt;
  ObjectNode effective = *pn;
  effective.rotation = effective_rotation(graph, parent);
  const std::vector<std::string> members = group_children(graph, parent, preposition);
  const std::set<std::string> member_set(members.begin(), members.end());
  bool unique = false;
  auto order = order_from(members, group_relation(graph, member_set, sibling_axis(effective, preposition)), &unique);
  if (!unique) return std::nullopt;
  return order;
}

namespace {

std::optional<SceneGraph> apply_orderings(const SceneGraph& g, const std::string& parent, Preposition p,
                                          const json& reply, std::vector<std::string>& errors) {
  errors = shipped_schema("refiner").validate(reply);
  if (!errors.empty()) return std::nullopt;
  const auto members = group_children(g, parent, p);
  const std::set<std::string> member_set(members.begin(), members.end());
  SceneGraph out = g;
  for (const json& o : reply["orderings"]) {
    const std::string a = o["parent"].get<std::string>();
    const std::string b = o["child"].get<std::string>();
    if (!member_set.count(a) || !member_set.count(b) || a == b) {
      errors.push_back("ordering " + a + " -> " + b + " must relate two different children of " + parent);
      continue;
    }
    Edge e{a, b, *parse_preposition(o["preposition"].get<std::string>()),
           *parse_adjacency(o["adjacency"].get<std::string>())};
    if (!has_edge(out, a, b, e.preposition)) out.edges.push_back(std::move(e));
  }
  if (!errors.empty()) return std::nullopt;
  if (!find_cycles(out).empty()) {
    errors.push_back("the orderings create a cycle");
    return std::nullopt;
  }
  if (!induced_sibling_order(out, parent, p)) {
    errors.push_back("the orderings do not place every child in a single row along the parent");
    return std::nullopt;
  }
  return out;
}

}  // namespace

SceneGraph refine_siblings(SceneGraph graph, GenerationBackend* backend, const AgentOptions& options,
                           StageTranscript* transcript) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> local_notes;
  std::vector<std::string>* notes = transcript ? &transcript->notes : &local_notes;
  if (transcript && transcript->stage.empty()) transcript->stage = "refiner";
  if (transcript && backend) transcript->system_prompt = resolve_system_prompt(options, "refiner");

  std::vector<std::string> parents;
  for (const ObjectNode& n : graph.nodes) parents.push_back(n.id);
  std::sort(parents.begin(), parents.end());
  for (const std::string& parent : parents) {
    std::set<Preposition> preps;
    for (const Edge* e : graph.out_edges(parent)) preps.insert(e->preposition);
    for (Preposition p : preps) {
      const auto members = group_children(graph, parent, p);
      if (members.size() < 2 || induced_sibling_order(graph, parent, p)) continue;
      bool done = false;
      if (backend) {
        std::vector<Edge> in;
        for (const Edge* e : graph.in_edges(parent)) in.push_back(*e);
        json children = json::array();
        for (const auto& id : members) {
          std::vector<Edge> cin;
          for (const Edge* e : graph.in_edges(id)) cin.push_back(*e);
          children.push_back(node_to_entry(*graph.find(id), cin));
        }
        json message = {{"parent", node_to_entry(*graph.find(parent), in)},
                        {"preposition", std::string(to_string(p))},
                        {"children", std::move(children)}};
        std::optional<SceneGraph> accepted;
        StructuredCall call;
        call.stage = "refiner";
        call.label = parent + ":" + std::string(to_string(p));
        call.system_prompt = resolve_system_prompt(options, "refiner");
        call.user_message = message.dump(2);
        call.decoding = options.decoding;
        call.max_retries = options.max_retries;
        call.check = [&](const json& reply) {
          std::vector<std::string> errors;
          accepted = apply_orderings(graph, parent, p, reply, errors);
          return errors;
        };
        StructuredResult r = call_structured(*backend, call);
        if (transcript) {
          for (CallRecord& c : r.calls) transcript->calls.push_back(std::move(c));
          transcript->retry_count = std::max(transcript->retry_count, r.retries);
        }
        if (r.value && accepted) {
          graph = std::move(*accepted);
          notes->push_back("refiner: backend ordered children of " + parent);
          done = true;
        } else {
          notes->push_back("refiner: backend retries exhausted for " + parent + "; using fallback");
        }
      }
      if (!done) chain_group(graph, parent, p, notes);
    }
  }
  if (transcript) {
    transcript->output = graph_to_document(graph);
    transcript->duration_ms +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return graph;
}

namespace {

bool acyclic_without(const SceneGraph& g, const std::vector<int>& removed) {
  SceneGraph copy;
  copy.room = g.room;
  copy.nodes = g.nodes;
  for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
    if (std::find(removed.begin(), removed.end(), i) == removed.end()) copy.edges.push_back(g.edges[i]);
  }
  return find_cycles(copy).empty();
}

// Indices of edges whose endpoints share a cyclic strongly connected component.
std::vector<int> cyclic_edges(const SceneGraph& g) {
  std::map<std::string, int> component;
  const auto cycles = find_cycles(g);
  for (int c = 0; c < static_cast<int>(cycles.size()); ++c) {
    for (const auto& id : cycles[c]) component[id] = c;
  }
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
    auto a = component.find(g.edges[i].parent);
    auto b = component.find(g.edges[i].child);
    if (a != component.end() && b != component.end() && a->second == b->second) out.push_back(i);
  }
  return out;
}

// Subsets of size k from candidates (descending), visited so that subsets of
// higher indices come first.
bool search_subsets(const SceneGraph& g, const std::vector<int>& cand, size_t k, size_t start,
                    std::vector<int>& chosen) {
  if (chosen.size() == k) return acyclic_without(g, chosen);
  for (size_t i = start; i < cand.size(); ++i) {
    if (cand.size() - i < k - chosen.size()) break;
    chosen.push_back(cand[i]);
    if (search_subsets(g, cand, k, i + 1, chosen)) return true;
    chosen.pop_back();
  }
  return false;
}

constexpr size_t kExactSearchLimit = 16;

}  // namespace

SceneGraph break_cycles(SceneGraph graph, std::vector<Edge>* removed) {
  std::vector<int> cand = cyclic_edges(graph);
  if (cand.empty()) return graph;
  std::sort(cand.rbegin(), cand.rend());
  std::vector<int> drop;
  if (cand.size() <= kExactSearchLimit) {
    for (size_t k = 1; k <= cand.size(); ++k) {
      std::vector<int> chosen;
      if (search_subsets(graph, cand, k, 0, chosen)) {
        drop = chosen;
        break;
      }
    }
  } else {
    // Greedy: drop the highest-index edge of the first cycle found, repeat.
    while (true) {
      if (cyclic_edges(graph).empty()) break;
      const auto cycles = find_cycles(graph);
      std::set<std::string> comp(cycles[0].begin(), cycles[0].end());
      // Walk from the smallest id until a node repeats.
      std::map<std::string, int> seen_at;
      std::vector<int> path;
      std::string cur = cycles[0][0];
      while (!seen_at.count(cur)) {
        seen_at[cur] = static_cast<int>(path.size());
        for (int i = 0; i < static_cast<int>(graph.edges.size()); ++i) {
          const Edge& e = graph.edges[i];
          if (e.parent == cur && comp.count(e.child)) {
            path.push_back(i);
            cur = e.child;
            break;
          }
        }
      }
      const int worst = *std::max_element(path.begin() + seen_at[cur], path.end());
      if (removed) removed->push_back(graph.edges[worst]);
      graph.edges.erase(graph.edges.begin() + worst);
    }
    return graph;
  }
  std::sort(drop.begin(), drop.end());
  for (int i : drop) {
    if (removed) removed->push_back(graph.edges[i]);
  }
  for (auto it = drop.rbegin(); it != drop.rend(); ++it) graph.edges.erase(graph.edges.begin() + *it);
  return graph;
}

SceneGraph correct_graph(SceneGraph graph, GenerationBackend* backend, const AgentOptions& corrector,
                         const AgentOptions& refiner, StageTranscript* corrector_transcript,
                         StageTranscript* refiner_transcript) {
  constexpr int kRounds = 4;
  for (int round = 0;; ++round) {
    const std::vector<Violation> found = detect_violations(graph);
    graph = resolve_violations(std::move(graph), found, backend, corrector, corrector_transcript);
    graph = refine_siblings(std::move(graph), backend, refiner, refiner_transcript);
    std::vector<Edge> removed;
    graph = break_cycles(std::move(graph), &removed);
    for (const Edge& e : removed) {
      if (refiner_transcript) refiner_transcript->notes.push_back("removed cycle edge " + describe(e));
    }
    if (detect_violations(graph).empty() && validate_graph(graph).empty()) break;
    if (round + 1 >= kRounds) {
      // Drop whatever still misbehaves, worst first, until clean.
      while (true) {
        graph = break_cycles(std::move(graph));
        const auto left = detect_violations(graph);
        if (left.empty() && validate_graph(graph).empty()) break;
        std::string victim = left.empty() ? std::string() : target_of(left.front());
        if (victim.empty() || !graph.find(victim)) {
          const auto report = validate_graph(graph);
          victim = report.empty() || report.front().nodes.empty() ? std::string() : report.front().nodes.front();
        }
        if (victim.empty() || !graph.find(victim)) break;
        if (corrector_transcript) corrector_transcript->notes.push_back("removed " + victim + " to settle the graph");
        remove_node(graph, victim);
      }
      break;
    }
  }
  return graph;
}

}  // namespace roomgraph
