#include "roomgraph/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/scene_io.hpp"

namespace roomgraph {

using nlohmann::json;

void validate_solver_config(const SolverConfig& c) {
  if (c.samples_per_object <= 0) throw Error(ErrorCode::kInvalidArgument, "samples_per_object must be positive");
  if (c.max_backtracks < 0) throw Error(ErrorCode::kInvalidArgument, "max_backtracks must be non-negative");
  if (!(c.contact_tolerance > 0)) throw Error(ErrorCode::kInvalidArgument, "contact_tolerance must be positive");
  if (!(c.adjacency_gap > 0)) throw Error(ErrorCode::kInvalidArgument, "adjacency_gap must be positive");
  if (!(c.nonadjacent_min > 0 && c.nonadjacent_min < c.nonadjacent_max)) {
    throw Error(ErrorCode::kInvalidArgument, "nonadjacent range must satisfy 0 < min < max");
  }
  if (c.escalate_after <= 0) throw Error(ErrorCode::kInvalidArgument, "escalate_after must be positive");
}

const Placement* Layout::find(const std::string& id) const {
  for (const Placement& p : placements) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

namespace {

json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

json layout_to_json(const Layout& layout) {
  json placements = json::array();
  for (const Placement& p : layout.placements) {
    const Box3 b = p.box();
    placements.push_back({{"id", p.id},
                          {"position", vec_json(p.position)},
                          {"rotation", degrees(p.rotation)},
                          {"half_extents", vec_json(p.half)},
                          {"bbox", {{"min", vec_json(b.min)}, {"max", vec_json(b.max)}}}});
  }
  json failures = json::object();
  for (const auto& [id, n] : layout.stats.failures) failures[id] = n;
  json events = json::array();
  for (const BacktrackEvent& e : layout.stats.events) {
    events.push_back({{"failed_level", e.failed_level}, {"resume_level", e.resume_level}, {"node", e.node}});
  }
  return {{"status", layout.solved() ? "solved" : "unsat"},
          {"seed", layout.seed},
          {"room", room_to_json(layout.room)},
          {"placements", std::move(placements)},
          {"stats",
           {{"samples", layout.stats.samples},
            {"backtracks", layout.stats.backtracks},
            {"deepest_level", layout.stats.deepest_level},
            {"failures", std::move(failures)},
            {"events", std::move(events)}}},
          {"message", layout.message}};
}

Layout layout_from_json(const json& j) {
  Layout l;
  try {
    const std::string status = j.at("status").get<std::string>();
    if (status != "solved" && status != "unsat") throw Error(ErrorCode::kParseError, "layout status " + status);
    l.status = status == "solved" ? SolveStatus::kSolved : SolveStatus::kUnsat;
    l.seed = j.at("seed").get<uint64_t>();
    l.room = room_from_json(j.at("room"));
    for (const json& p : j.at("placements")) {
      Placement pl;
      pl.id = p.at("id").get<std::string>();
      pl.position = vec_from(p.at("position"));
      if (!rotation_from_degrees(p.at("rotation").get<int>(), pl.rotation)) {
        throw Error(ErrorCode::kParseError, pl.id + ": bad rotation");
      }
      pl.half = vec_from(p.at("half_extents"));
      l.placements.push_back(std::move(pl));
    }
    const json& s = j.at("stats");
    l.stats.samples = s.at("samples").get<int64_t>();
    l.stats.backtracks = s.at("backtracks").get<int>();
    l.stats.deepest_level = s.at("deepest_level").get<int>();
    for (const auto& [id, n] : s.at("failures").items()) l.stats.failures[id] = n.get<int>();
    for (const json& e : s.at("events")) {
      l.stats.events.push_back(
          {e.at("failed_level").get<int>(), e.at("resume_level").get<int>(), e.at("node").get<std::string>()});
    }
    l.message = j.value("message", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("layout: ") + e.what());
  }
  return l;
}

namespace {

// Range of a child's center offset from its parent's center along each
// horizontal world axis, implied by one edge.
struct OffsetRange {
  Interval x;
  Interval y;
};

Interval symmetric(double r) { return {-std::abs(r), std::abs(r)}; }

OffsetRange edge_offsets(const Edge& e, Vec3 ph, Rotation pr, Vec3 ch, const SolverConfig& c) {
  switch (e.preposition) {
    case Preposition::kOn:
    case Preposition::kUnder: return {symmetric(ph.x - ch.x), symmetric(ph.y - ch.y)};
    case Preposition::kAbove: return {symmetric(ph.x), symmetric(ph.y)};
    default: break;
  }
  const Heading d = to_world(lateral_direction(e.preposition), pr);
  const int a = axis_of(d);
  const double s = sign_of(d);
  const double base = ph[a] + ch[a];
  Interval along = e.adjacency == Adjacency::kAdjacent ? Interval::point(s * base)
                                                      : Interval{s * (base + c.nonadjacent_min), s * (base + c.nonadjacent_max)};
  if (along.lo > along.hi) std::swap(along.lo, along.hi);
  const Interval across = symmetric(ph[1 - a] - ch[1 - a]);
  return a == 0 ? OffsetRange{along, across} : OffsetRange{across, along};
}

}  // namespace

SceneGraph compute_cluster_extents(SceneGraph graph, const SolverConfig& config) {
  apply_default_rotations(graph);
  const std::vector<std::string> order = topological_order(graph);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ObjectNode* n = graph.find(*it);
    if (!n) continue;
    const Vec3 ph = world_half_extents(n->size, n->rotation);
    Extents4 w{ph.x, ph.x, ph.y, ph.y};
    for (const Edge* e : graph.out_edges(n->id)) {
      const ObjectNode* child = graph.find(e->child);
      if (!child) continue;
      const Vec3 ch = world_half_extents(child->size, child->rotation);
      const Extents4 ccs = local_extents_to_world(
          child->cluster_extents.value_or(Extents4{child->size.x / 2, child->size.x / 2, child->size.y / 2,
                                                   child->size.y / 2}),
          child->rotation);
      const OffsetRange off = edge_offsets(*e, ph, n->rotation, ch, config);
      w.x_neg = std::max(w.x_neg, ccs.x_neg - off.x.lo);
      w.x_pos = std::max(w.x_pos, off.x.hi + ccs.x_pos);
      w.y_neg = std::max(w.y_neg, ccs.y_neg - off.y.lo);
      w.y_pos = std::max(w.y_pos, off.y.hi + ccs.y_pos);
    }
    n->cluster_extents = world_extents_to_local(w, n->rotation);
  }
  return graph;
}

bool FeasibleRegion::empty() const {
  for (int a = 0; a < 3; ++a) {
    if (Interval{box.min[a], box.max[a]}.empty()) return true;
  }
  return false;
}

namespace {

struct Region3 {
  Interval axis[3];

  void clip(int a, Interval i) { axis[a] = axis[a].intersect(i); }
  bool empty() const { return axis[0].empty() || axis[1].empty() || axis[2].empty(); }
  Box3 box() const {
    return {{axis[0].lo, axis[1].lo, axis[2].lo}, {axis[0].hi, axis[1].hi, axis[2].hi}};
  }
};

// Center interval along a wall's normal axis for an object touching (or
// kept `gap` away from) that wall.
Interval wall_band(LayoutNode wall, const Room& room, Vec3 h, Interval gap) {
  const Heading out = wall_outward(wall);
  const int a = axis_of(out);
  const double len = a == 0 ? room.width_x : room.depth_y;
  if (sign_of(out) > 0) return {len - h[a] - gap.hi, len - h[a] - gap.lo};
  return {h[a] + gap.lo, h[a] + gap.hi};
}

}  // namespace

FeasibleRegion feasible_region(const ObjectNode& node, const SceneGraph& graph,
                               const std::map<std::string, Placement>& placed, const SolverConfig& config) {
  const Room& room = graph.room;
  const Vec3 h = world_half_extents(node.size, node.rotation);
  const Interval adj = Interval::point(0.0);
  const Interval nonadj{config.nonadjacent_min, config.nonadjacent_max};
  Region3 r;
  r.axis[0] = {h.x, room.width_x - h.x};
  r.axis[1] = {h.y, room.depth_y - h.y};
  r.axis[2] = {h.z, room.height_z - h.z};

  bool corner_done = false;
  for (const Edge* e : graph.in_edges(node.id)) {
    const Interval gap = e->adjacency == Adjacency::kAdjacent ? adj : nonadj;
    if (auto layout = layout_node_from_id(e->parent)) {
      if (e->preposition == Preposition::kInTheCorner) {
        if (corner_done) continue;
        corner_done = true;
        for (LayoutNode w : corner_walls(graph, node.id)) {
          r.clip(axis_of(wall_outward(w)), wall_band(w, room, h, {0.0, config.adjacency_gap}));
        }
        r.clip(2, Interval::point(h.z));
        continue;
      }
      switch (*layout) {
        case LayoutNode::kMiddleOfRoom:
          r.clip(0, {room.width_x / 4, 3 * room.width_x / 4});
          r.clip(1, {room.depth_y / 4, 3 * room.depth_y / 4});
          [[fallthrough]];
        case LayoutNode::kFloor: r.clip(2, {h.z + gap.lo, h.z + gap.hi}); break;
        case LayoutNode::kCeiling: r.clip(2, {room.height_z - h.z - gap.hi, room.height_z - h.z - gap.lo}); break;
        default: r.clip(axis_of(wall_outward(*layout)), wall_band(*layout, room, h, gap)); break;
      }
      continue;
    }
    auto it = placed.find(e->parent);
    if (it == placed.end()) throw Error(ErrorCode::kParentUnplaced, e->parent + " is not placed before " + node.id);
    const Placement& p = it->second;
    const double top = p.position.z + p.half.z;
    const double bottom = p.position.z - p.half.z;
    auto within = [&](int a, double slack) { r.clip(a, {p.position[a] - slack, p.position[a] + slack}); };
    switch (e->preposition) {
      case Preposition::kOn:
        within(0, p.half.x - h.x);
        within(1, p.half.y - h.y);
        r.clip(2, {top + h.z + gap.lo, top + h.z + gap.hi});
        break;
      case Preposition::kUnder:
        within(0, p.half.x - h.x);
        within(1, p.half.y - h.y);
        r.clip(2, Interval::point(h.z));
        if (2 * h.z > bottom + Interval::kSlack) r.clip(2, {1, 0});
        break;
      case Preposition::kAbove:
        within(0, p.half.x);
        within(1, p.half.y);
        r.clip(2, {top + h.z, room.height_z - h.z});
        break;
      default: {
        const OffsetRange off = edge_offsets(*e, p.half, p.rotation, h, config);
        r.clip(0, {p.position.x + off.x.lo, p.position.x + off.x.hi});
        r.clip(1, {p.position.y + off.y.lo, p.position.y + off.y.hi});
        r.clip(2, Interval::point(bottom + h.z));
        break;
      }
    }
  }

  FeasibleRegion out;
  out.unshrunk = r.box();
  out.box = out.unshrunk;
  if (!r.empty() && node.cluster_extents) {
    const Extents4 cs = local_extents_to_world(*node.cluster_extents, node.rotation);
    Region3 s = r;
    s.clip(0, {cs.x_neg, room.width_x - cs.x_pos});
    s.clip(1, {cs.y_neg, room.depth_y - cs.y_pos});
    if (!s.empty() && s.box() != r.box()) {
      out.box = s.box();
      out.shrunk = true;
    }
  }
  return out;
}

bool check_collision(const Box3& candidate, const std::vector<PlacedBox>& placed,
                     const std::set<std::string>& sanctioned, double tolerance) {
  for (const PlacedBox& p : placed) {
    if (sanctioned.count(p.id)) continue;
    if (intersection_volume(candidate, p.box) > tolerance) return true;
  }
  return false;
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double sample_interval(double lo, double hi, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  if (hi <= lo) return 0.5 * (lo + hi);
  return std::min(hi, lo + u * (hi - lo));
}

// A center on each axis chosen among the region bounds, the positions flush
// against a placed box and one uniform draw.
Vec3 contact_sample(const Box3& b, const std::vector<PlacedBox>& boxes, Vec3 half, std::mt19937_64& rng) {
  Vec3 c;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> cand = {b.min[a], b.max[a], sample_interval(b.min[a], b.max[a], rng)};
    for (const PlacedBox& q : boxes) {
      for (double v : {q.box.max[a] + half[a], q.box.min[a] - half[a]}) {
        if (v >= b.min[a] && v <= b.max[a]) cand.push_back(v);
      }
    }
    c[a] = cand[rng() % cand.size()];
  }
  return c;
}

struct Prepared {
  SceneGraph graph;
  std::vector<std::vector<std::string>> levels;  // index = level
  std::map<std::string, int> level_of;
  std::map<std::string, std::set<std::string>> sanctioned;
};

Prepared prepare(const SceneGraph& input, const SolverConfig& config) {
  Prepared p;
  const bool need_cs = std::any_of(input.nodes.begin(), input.nodes.end(),
                                   [](const ObjectNode& n) { return !n.cluster_extents; });
  if (need_cs) {
    p.graph = compute_cluster_extents(input, config);
  } else {
    p.graph = input;
    apply_default_rotations(p.graph);
  }
  const std::vector<std::string> order = topological_order(p.graph);
  const std::map<std::string, int> depth = depth_map(p.graph);
  for (const std::string& id : order) {
    if (is_layout_id(id)) continue;
    auto d = depth.find(id);
    if (d == depth.end()) throw Error(ErrorCode::kUnreachable, "no layout node reaches " + id);
    int level = std::max(1, d->second);
    for (const Edge* e : p.graph.in_edges(id)) {
      auto pl = p.level_of.find(e->parent);
      if (pl != p.level_of.end()) level = std::max(level, pl->second + 1);
    }
    p.level_of[id] = level;
    if (static_cast<int>(p.levels.size()) <= level) p.levels.resize(level + 1);
    p.levels[level].push_back(id);
  }
  for (const Edge& e : p.graph.edges) {
    if (is_layout_id(e.parent)) continue;
    p.sanctioned[e.child].insert(e.parent);
    p.sanctioned[e.parent].insert(e.child);
  }
  return p;
}

bool only_layout_parents(const SceneGraph& g, const std::string& id) {
  for (const Edge* e : g.in_edges(id)) {
    if (!is_layout_id(e->parent)) return false;
  }
  return true;
}

}  // namespace

Layout solve_layout(const SceneGraph& graph, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_solver_config(config);
  if (!graph.room.valid()) throw Error(ErrorCode::kInvalidArgument, "room dimensions must be positive");
  Prepared prep = prepare(graph, config);
  const SceneGraph& g = prep.graph;

  Layout layout;
  layout.room = g.room;
  layout.seed = config.seed;
  std::mt19937_64 rng(config.seed);
  std::map<std::string, Placement> placed;
  std::map<int, int> consecutive;
  const int max_level = static_cast<int>(prep.levels.size()) - 1;
  bool unsat = false;

  auto clear_from = [&](int level) {
    for (int l = level; l <= max_level; ++l) {
      for (const std::string& id : prep.levels[l]) placed.erase(id);
    }
  };

  // Places one level; returns the failing node id and whether the failure
  // can never be fixed by re-sampling.
  auto place_level = [&](int level, bool& hopeless) -> std::string {
    hopeless = false;
    for (const std::string& id : prep.levels[level]) {
      const ObjectNode& node = *g.find(id);
      const FeasibleRegion region = feasible_region(node, g, placed, config);
      if (region.empty()) {
        hopeless = only_layout_parents(g, id);
        return id;
      }
      std::vector<PlacedBox> boxes;
      boxes.reserve(placed.size());
      for (const auto& [pid, pl] : placed) boxes.push_back({pid, pl.box()});
      const Vec3 half = world_half_extents(node.size, node.rotation);
      bool ok = false;
      for (int i = 0; i < config.samples_per_object && !ok; ++i) {
        const Box3& b = (region.shrunk && layout.stats.samples % 2 == 0) ? region.box : region.unshrunk;
        Vec3 c;
        if (layout.stats.samples % 3 == 2) {
          c = contact_sample(b, boxes, half, rng);
        } else {
          for (int a = 0; a < 3; ++a) c[a] = sample_interval(b.min[a], b.max[a], rng);
        }
        ++layout.stats.samples;
        if (check_collision(Box3::centered(c, half), boxes, prep.sanctioned[id], config.contact_tolerance)) continue;
        placed[id] = Placement{id, c, node.rotation, half};
        ok = true;
      }
      if (!ok) return id;
    }
    return {};
  };

  int level = 1;
  while (level <= max_level) {
    layout.stats.deepest_level = std::max(layout.stats.deepest_level, level);
    bool hopeless = false;
    const std::string failed = place_level(level, hopeless);
    if (failed.empty()) {
      consecutive[level] = 0;
      ++level;
      continue;
    }
    layout.stats.failures[failed]++;
    if (hopeless) {
      unsat = true;
      layout.message = failed + " has an empty feasible region at level " + std::to_string(level);
      break;
    }
    if (layout.stats.backtracks >= config.max_backtracks) {
      unsat = true;
      layout.message = "backtrack budget exhausted; last failure " + failed + " at level " + std::to_string(level);
      break;
    }
    ++layout.stats.backtracks;
    int resume = level - 1;
    if (++consecutive[level] >= config.escalate_after) {
      resume = level - 2;
      consecutive[level] = 0;
    }
    resume = std::max(resume, 1);
    layout.stats.events.push_back({level, resume, failed});
    clear_from(resume);
    level = resume;
  }

  layout.status = unsat ? SolveStatus::kUnsat : SolveStatus::kSolved;
  for (auto& [id, p] : placed) layout.placements.push_back(p);
  layout.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return layout;
}

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool in_range(double v, double lo, double hi, double tol) { return v >= lo - tol && v <= hi + tol; }

// Distance between a box face and the named wall plane, measured into the room.
double wall_gap(LayoutNode wall, const Room& room, const Placement& c) {
  const Heading out = wall_outward(wall);
  const int a = axis_of(out);
  const double len = a == 0 ? room.width_x : room.depth_y;
  return sign_of(out) > 0 ? len - (c.position[a] + c.half[a]) : c.position[a] - c.half[a];
}

bool gap_ok(double gap, Adjacency adj, const SolverConfig& c, double tol) {
  return adj == Adjacency::kAdjacent ? near(gap, 0.0, tol) : in_range(gap, c.nonadjacent_min, c.nonadjacent_max, tol);
}

}  // namespace

bool edges_hold_on_axis(const SceneGraph& graph, const std::string& node, const Placement& c,
                        const std::map<std::string, Placement>& placed, int axis, const SolverConfig& config,
                        double tol) {
  const Room& room = graph.room;
  const double cbottom = c.position.z - c.half.z;
  const double ctop = c.position.z + c.half.z;
  for (const Edge* e : graph.in_edges(node)) {
    if (auto layout = layout_node_from_id(e->parent)) {
      if (e->preposition == Preposition::kInTheCorner) {
        for (LayoutNode w : corner_walls(graph, node)) {
          if (axis_of(wall_outward(w)) == axis && !in_range(wall_gap(w, room, c), 0.0, config.adjacency_gap, tol)) {
            return false;
          }
        }
        if (axis == 2 && !near(cbottom, 0.0, tol)) return false;
        continue;
      }
      switch (*layout) {
        case LayoutNode::kMiddleOfRoom:
          if (axis == 0 && !in_range(c.position.x, room.width_x / 4, 3 * room.width_x / 4, tol)) return false;
          if (axis == 1 && !in_range(c.position.y, room.depth_y / 4, 3 * room.depth_y / 4, tol)) return false;
          [[fallthrough]];
        case LayoutNode::kFloor:
          if (axis == 2 && !gap_ok(cbottom, e->adjacency, config, tol)) return false;
          break;
        case LayoutNode::kCeiling:
          if (axis == 2 && !gap_ok(room.height_z - ctop, e->adjacency, config, tol)) return false;
          break;
        default:
          if (axis_of(wall_outward(*layout)) == axis && !gap_ok(wall_gap(*layout, room, c), e->adjacency, config, tol)) {
            return false;
          }
          break;
      }
      continue;
    }
    auto it = placed.find(e->parent);
    if (it == placed.end()) return false;
    const Placement& p = it->second;
    const double ptop = p.position.z + p.half.z;
    const double pbottom = p.position.z - p.half.z;
    const double delta = axis < 2 ? std::abs(c.position[axis] - p.position[axis]) : 0.0;
    switch (e->preposition) {
      case Preposition::kOn:
        if (axis < 2 && !(c.half[axis] <= p.half[axis] + tol && delta <= p.half[axis] - c.half[axis] + tol)) return false;
        if (axis == 2 && !gap_ok(cbottom - ptop, e->adjacency, config, tol)) return false;
        break;
      case Preposition::kUnder:
        if (axis < 2 && !(c.half[axis] <= p.half[axis] + tol && delta <= p.half[axis] - c.half[axis] + tol)) return false;
        if (axis == 2 && !(near(cbottom, 0.0, tol) && ctop <= pbottom + tol)) return false;
        break;
      case Preposition::kAbove:
        if (axis < 2 && delta > p.half[axis] + tol) return false;
        if (axis == 2 && cbottom < ptop - tol) return false;
        break;
      default: {
        const Heading d = to_world(lateral_direction(e->preposition), p.rotation);
        const int a = axis_of(d);
        if (axis == a) {
          const double gap = sign_of(d) * (c.position[a] - p.position[a]) - p.half[a] - c.half[a];
          if (!gap_ok(gap, e->adjacency, config, tol)) return false;
        } else if (axis < 2) {
          if (delta > std::abs(p.half[axis] - c.half[axis]) + tol) return false;
        } else if (!near(cbottom, pbottom, tol)) {
          return false;
        }
        break;
      }
    }
  }
  return true;
}

std::vector<std::string> verify_layout(const SceneGraph& input, const Layout& layout, const SolverConfig& config,
                                       double tol) {
  std::vector<std::string> problems;
  if (!layout.solved()) {
    problems.push_back("layout is not solved");
    return problems;
  }
  SceneGraph g = input;
  apply_default_rotations(g);
  std::map<std::string, Placement> placed;
  for (const Placement& p : layout.placements) placed[p.id] = p;
  for (const ObjectNode& n : g.nodes) {
    auto it = placed.find(n.id);
    if (it == placed.end()) {
      problems.push_back(n.id + " has no placement");
      continue;
    }
    const Placement& p = it->second;
    if (p.rotation != n.rotation) problems.push_back(n.id + " rotation differs from the graph");
    const Vec3 h = world_half_extents(n.size, n.rotation);
    for (int a = 0; a < 3; ++a) {
      if (!near(h[a], p.half[a], tol)) problems.push_back(n.id + " extents differ from its size");
    }
    if (!box_inside(p.box(), g.room.box(), tol)) problems.push_back(n.id + " leaves the room");
    for (int a = 0; a < 3; ++a) {
      if (!edges_hold_on_axis(g, n.id, p, placed, a, config, tol)) {
        problems.push_back(n.id + " violates an edge constraint on axis " + std::string(1, "xyz"[a]));
      }
    }
  }
  for (size_t i = 0; i < layout.placements.size(); ++i) {
    for (size_t j = i + 1; j < layout.placements.size(); ++j) {
      const double v = intersection_volume(layout.placements[i].box(), layout.placements[j].box());
      if (v > config.contact_tolerance) {
        problems.push_back(layout.placements[i].id + " overlaps " + layout.placements[j].id);
      }
    }
  }
  return problems;
}

}  // namespace roomgraph
