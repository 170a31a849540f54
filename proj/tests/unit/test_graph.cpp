#include <doctest.h>

#include <algorithm>
#include <map>

#include "builders.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/scene_io.hpp"

using namespace roomgraph;
using namespace roomgraph::testing;

namespace {

const Room kRoom{4.0, 3.0, 2.4};

bool has_kind(const ValidationReport& r, GraphErrorKind k) {
  return std::any_of(r.begin(), r.end(), [&](const GraphError& e) { return e.kind == k; });
}

}  // namespace

TEST_CASE("two-node cycle is reported once with both ids") {
  auto g = graph(kRoom, {obj("a_1", {1, 1, 1}), obj("b_1", {1, 1, 1})},
                 {edge("floor", "a_1", Preposition::kOn), edge("a_1", "b_1", Preposition::kLeftOf),
                  edge("b_1", "a_1", Preposition::kRightOf)});
  auto report = validate_graph(g);
  REQUIRE(report.size() == 1);
  CHECK(report[0].kind == GraphErrorKind::kCycleDetected);
  CHECK(report[0].nodes == std::vector<std::string>{"a_1", "b_1"});
}

TEST_CASE("wall parent with a lateral preposition is rejected") {
  auto g = graph(kRoom, {obj("lamp_1", {0.3, 0.3, 0.5})}, {edge("wall_north", "lamp_1", Preposition::kLeftOf)});
  CHECK(has_kind(validate_graph(g), GraphErrorKind::kInvalidLayoutPreposition));
}

TEST_CASE("well-formed chain validates clean") {
  auto g = graph(kRoom, {obj("table_1", {1.6, 0.9, 0.75}), obj("lamp_1", {0.3, 0.3, 0.5})},
                 {edge("floor", "table_1", Preposition::kOn), edge("table_1", "lamp_1", Preposition::kOn)});
  CHECK(validate_graph(g).empty());
  CHECK(validate_graph(g) == validate_graph(g));
}

TEST_CASE("structural errors name the offender") {
  auto g = graph(kRoom, {obj("a_1", {1, 0, 1}), obj("a_1", {1, 1, 1}), obj("floor", {1, 1, 1})},
                 {edge("a_1", "a_1", Preposition::kOn), edge("ghost", "a_1", Preposition::kOn),
                  edge("a_1", "wall_east", Preposition::kOn), edge("floor", "a_1", Preposition::kInTheCorner),
                  edge("a_1", "floor", Preposition::kInTheCorner)});
  auto r = validate_graph(g);
  CHECK(has_kind(r, GraphErrorKind::kNonPositiveSize));
  CHECK(has_kind(r, GraphErrorKind::kDuplicateNodeId));
  CHECK(has_kind(r, GraphErrorKind::kReservedNodeId));
  CHECK(has_kind(r, GraphErrorKind::kSelfLoop));
  CHECK(has_kind(r, GraphErrorKind::kUnknownEndpoint));
  CHECK(has_kind(r, GraphErrorKind::kLayoutNodeAsChild));
  CHECK(has_kind(r, GraphErrorKind::kCornerNeedsWall));
  CHECK(has_kind(validate_graph(graph({0, 1, 1}, {}, {})), GraphErrorKind::kInvalidRoom));
}

TEST_CASE("topological order puts layout nodes first and breaks ties by id") {
  auto g = graph(kRoom, {obj("table_1", {1, 1, 1}), obj("lamp_1", {0.2, 0.2, 0.2}), obj("b_1", {1, 1, 1}),
                         obj("a_1", {1, 1, 1})},
                 {edge("floor", "table_1", Preposition::kOn), edge("table_1", "lamp_1", Preposition::kOn),
                  edge("floor", "b_1", Preposition::kOn), edge("floor", "a_1", Preposition::kOn)});
  auto order = topological_order(g);
  REQUIRE(order.size() == 11);
  CHECK(order[0] == "floor");
  CHECK(order[6] == "middle_of_room");
  CHECK(std::vector<std::string>(order.begin() + 7, order.end()) ==
        std::vector<std::string>{"a_1", "b_1", "table_1", "lamp_1"});
}

TEST_CASE("topological order rejects cycles") {
  auto g = graph(kRoom, {obj("a_1", {1, 1, 1}), obj("b_1", {1, 1, 1})},
                 {edge("a_1", "b_1", Preposition::kOn), edge("b_1", "a_1", Preposition::kOn)});
  try {
    topological_order(g);
    FAIL("expected CyclicGraph");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCyclicGraph);
  }
}

TEST_CASE("depth is the shortest distance from a layout node") {
  auto g = graph(kRoom, {obj("desk_1", {1.2, 0.6, 0.75}), obj("monitor_1", {0.5, 0.2, 0.4}), obj("table_1", {1, 1, 1}),
                         obj("vase_1", {0.2, 0.2, 0.3}), obj("orphan_1", {1, 1, 1})},
                 {edge("wall_south", "desk_1", Preposition::kOn), edge("desk_1", "monitor_1", Preposition::kOn),
                  edge("floor", "table_1", Preposition::kOn), edge("table_1", "vase_1", Preposition::kOn),
                  edge("floor", "vase_1", Preposition::kOn)});
  CHECK(depth_of(g, "floor") == 0);
  CHECK(depth_of(g, "desk_1") == 1);
  CHECK(depth_of(g, "monitor_1") == 2);
  CHECK(depth_of(g, "vase_1") == 1);
  CHECK_THROWS_AS(depth_of(g, "orphan_1"), Error);
  CHECK(unreachable_objects(g) == std::vector<std::string>{"orphan_1"});
}

TEST_CASE("corner walls complete a single wall deterministically") {
  auto g = graph(kRoom, {obj("a_1", {1, 1, 1}), obj("b_1", {1, 1, 1}), obj("c_1", {1, 1, 1})},
                 {edge("wall_north", "a_1", Preposition::kInTheCorner),
                  edge("wall_east", "b_1", Preposition::kInTheCorner),
                  edge("wall_north", "c_1", Preposition::kInTheCorner), edge("wall_east", "c_1", Preposition::kOn)});
  CHECK(corner_walls(g, "a_1") == std::vector<LayoutNode>{LayoutNode::kWallNorth, LayoutNode::kWallWest});
  CHECK(corner_walls(g, "b_1") == std::vector<LayoutNode>{LayoutNode::kWallEast, LayoutNode::kWallSouth});
  CHECK(corner_walls(g, "c_1") == std::vector<LayoutNode>{LayoutNode::kWallNorth, LayoutNode::kWallEast});
}

TEST_CASE("default rotations follow on and under parents") {
  auto g = graph(kRoom, {obj("desk_1", {1, 1, 1}, Rotation::k90), obj("lamp_1", {0.2, 0.2, 0.2}, Rotation::k0, false),
                         obj("cup_1", {0.1, 0.1, 0.1}, Rotation::k0, false)},
                 {edge("floor", "desk_1", Preposition::kOn), edge("desk_1", "lamp_1", Preposition::kOn),
                  edge("lamp_1", "cup_1", Preposition::kLeftOf)});
  apply_default_rotations(g);
  CHECK(g.find("lamp_1")->rotation == Rotation::k90);
  CHECK(g.find("cup_1")->rotation == Rotation::k0);
}

TEST_CASE("scene document round trip") {
  auto g = graph(kRoom, {obj("table_1", {1.6, 0.9, 0.75}, Rotation::k180), obj("lamp_1", {0.3, 0.3, 0.5}, Rotation::k90, false)},
                 {edge("floor", "table_1", Preposition::kOn), edge("wall_north", "table_1", Preposition::kOn, Adjacency::kNotAdjacent),
                  edge("table_1", "lamp_1", Preposition::kOn)});
  g.nodes[1].position = Vec3{1, 2, 3};
  g.nodes[1].cluster_extents = Extents4{0.15, 0.15, 0.2, 0.15};
  const auto doc = graph_to_document(g);
  CHECK(scene_document_errors(doc).empty());
  const SceneGraph back = graph_from_document(doc);
  CHECK(back == g);
  CHECK(graph_to_document(back) == doc);
}

TEST_CASE("engineer entries accept agent spellings and reject junk") {
  nlohmann::json entry = {{"new_object_id", "chair_1"},
                          {"name", "chair"},
                          {"style", "modern"},
                          {"material", "oak"},
                          {"size_in_meters", {{"Length", 0.5}, {"Width", 0.5}, {"Height", 0.9}}},
                          {"scene_graph", {{{"parent", "desk_1"}, {"preposition", "left_of"}, {"adjacency", "adjacent"}}}},
                          {"facing", "south_wall"}};
  auto parsed = entry_from_json(entry);
  CHECK(parsed.node.rotation == Rotation::k180);
  CHECK(parsed.edges.at(0).preposition == Preposition::kLeftOf);
  entry["facing"] = "up";
  CHECK_THROWS_AS(entry_from_json(entry), Error);
  CHECK(parse_preposition("in front of") == Preposition::kInFront);
  CHECK(parse_preposition("Left Of") == Preposition::kLeftOf);
  CHECK(!parse_preposition("beside"));
}

TEST_CASE("facing maps to the rotation that points +y at the wall") {
  CHECK(rotation_for_facing("north_wall") == Rotation::k0);
  CHECK(rotation_for_facing("east_wall") == Rotation::k90);
  CHECK(rotation_for_facing("south_wall") == Rotation::k180);
  CHECK(rotation_for_facing("west_wall") == Rotation::k270);
  CHECK(forward_heading(Rotation::k0) == wall_outward(LayoutNode::kWallNorth));
  CHECK(forward_heading(Rotation::k90) == wall_outward(LayoutNode::kWallEast));
  CHECK(forward_heading(Rotation::k180) == wall_outward(LayoutNode::kWallSouth));
  CHECK(forward_heading(Rotation::k270) == wall_outward(LayoutNode::kWallWest));
}
