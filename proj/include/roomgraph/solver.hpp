#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/scene.hpp"

namespace roomgraph {

struct SolverConfig {
  int samples_per_object = 30;
  int max_backtracks = 200;
  double contact_tolerance = 1e-6;  // m^3
  double adjacency_gap = 0.05;      // m
  double nonadjacent_min = 0.3;     // m
  double nonadjacent_max = 1.5;     // m
  uint64_t seed = 0;
  // Consecutive failures at one level before backtracking two levels.
  int escalate_after = 3;
};

// Throws Error(kInvalidArgument).
void validate_solver_config(const SolverConfig& config);

struct Placement {
  std::string id;
  Vec3 position;  // bbox center
  Rotation rotation = Rotation::k0;
  Vec3 half;  // world-frame half extents

  Box3 box() const { return Box3::centered(position, half); }
};

struct BacktrackEvent {
  int failed_level = 0;
  int resume_level = 0;
  std::string node;  // the node that could not be placed
};

struct SolverStats {
  int64_t samples = 0;
  int backtracks = 0;
  int deepest_level = 0;
  std::map<std::string, int> failures;  // per node
  std::vector<BacktrackEvent> events;
  double wall_ms = 0.0;  // not part of the serialized layout
};

enum class SolveStatus { kSolved, kUnsat };

struct Layout {
  Room room;
  SolveStatus status = SolveStatus::kSolved;
  uint64_t seed = 0;
  std::vector<Placement> placements;  // sorted by id
  SolverStats stats;
  std::string message;

  bool solved() const { return status == SolveStatus::kSolved; }
  const Placement* find(const std::string& id) const;
};

nlohmann::json layout_to_json(const Layout& layout);
Layout layout_from_json(const nlohmann::json& j);

// Applies default rotations and fills cluster_extents on every object,
// children first. Throws Error(kCyclicGraph).
SceneGraph compute_cluster_extents(SceneGraph graph, const SolverConfig& config = {});

// Allowed center positions. `box` is the region after the cluster-extent
// shrink (skipped when it would empty the region); `unshrunk` is the region
// before it.
struct FeasibleRegion {
  Box3 box;
  Box3 unshrunk;
  bool shrunk = false;

  bool empty() const;
};

// Throws Error(kParentUnplaced) when an object parent has no placement.
FeasibleRegion feasible_region(const ObjectNode& node, const SceneGraph& graph,
                               const std::map<std::string, Placement>& placed, const SolverConfig& config);

struct PlacedBox {
  std::string id;
  Box3 box;
};

// True iff the candidate overlaps some placed box by more than tolerance,
// ignoring boxes whose id is sanctioned.
bool check_collision(const Box3& candidate, const std::vector<PlacedBox>& placed,
                     const std::set<std::string>& sanctioned, double tolerance);

// Applies default rotations, computes missing cluster extents and places
// every object. Unsat layouts carry the partial placements of the last
// attempt. Throws Error(kCyclicGraph), Error(kUnreachable).
Layout solve_layout(const SceneGraph& graph, const SolverConfig& config);

// Checks one axis (0 = x, 1 = y, 2 = z) of every in-edge of `node` with the
// node at `candidate`; parents are looked up in `placed`. `graph` must
// already carry default rotations.
bool edges_hold_on_axis(const SceneGraph& graph, const std::string& node, const Placement& candidate,
                        const std::map<std::string, Placement>& placed, int axis, const SolverConfig& config,
                        double tol = 1e-6);

// Standalone check of a solved layout: every edge predicate, room
// containment and pairwise overlap. Returns one message per problem.
std::vector<std::string> verify_layout(const SceneGraph& graph, const Layout& layout, const SolverConfig& config,
                                       double tol = 1e-6);

}  // namespace roomgraph
