#include "corrector_fixtures.hpp"

#include "builders.hpp"

namespace roomgraph::testing {

namespace {

using P = Preposition;
constexpr Adjacency kAdj = Adjacency::kAdjacent;
constexpr Adjacency kGap = Adjacency::kNotAdjacent;
const Room kRoom{4.0, 3.0, 2.4};

}  // namespace

std::vector<ViolationFixture> violation_fixtures() {
  std::vector<ViolationFixture> out;
  const auto add = [&](std::string name, SceneGraph g, ViolationKind k, std::string subject) {
    out.push_back({std::move(name), std::move(g), k, std::move(subject)});
  };

  // Out of bounds: a lateral child on the side of a wall-flush parent.
  add("lamp behind sofa on south wall",
      graph(kRoom, {obj("sofa_1", {2.0, 0.9, 0.8}), obj("lamp_1", {0.3, 0.3, 1.5})},
            {edge("wall_south", "sofa_1", P::kOn), edge("floor", "sofa_1", P::kOn),
             edge("sofa_1", "lamp_1", P::kBehind, kGap)}),
      ViolationKind::kOutOfBounds, "lamp_1");
  add("plant behind shelf on north wall",
      graph(kRoom, {obj("shelf_1", {1.2, 0.4, 1.8}, Rotation::k180), obj("plant_1", {0.4, 0.4, 0.8})},
            {edge("wall_north", "shelf_1", P::kOn), edge("floor", "shelf_1", P::kOn),
             edge("shelf_1", "plant_1", P::kBehind)}),
      ViolationKind::kOutOfBounds, "plant_1");
  add("stool left of corner cabinet",
      graph(kRoom, {obj("cabinet_1", {0.8, 0.5, 1.0}, Rotation::k270), obj("stool_1", {0.4, 0.4, 0.5})},
            {edge("wall_east", "cabinet_1", P::kInTheCorner), edge("cabinet_1", "stool_1", P::kLeftOf)}),
      ViolationKind::kOutOfBounds, "stool_1");
  add("chair behind desk on west wall",
      graph(kRoom, {obj("desk_1", {1.4, 0.7, 0.75}, Rotation::k90), obj("chair_1", {0.5, 0.5, 0.9})},
            {edge("wall_west", "desk_1", P::kOn), edge("floor", "desk_1", P::kOn),
             edge("desk_1", "chair_1", P::kBehind, kGap)}),
      ViolationKind::kOutOfBounds, "chair_1");
  add("basket right of wardrobe in north-west corner",
      graph(kRoom, {obj("wardrobe_1", {1.0, 0.6, 2.0}, Rotation::k180), obj("basket_1", {0.4, 0.4, 0.4})},
            {edge("wall_north", "wardrobe_1", P::kInTheCorner), edge("wardrobe_1", "basket_1", P::kRightOf)}),
      ViolationKind::kOutOfBounds, "basket_1");

  // Adjacency conflicts: a third object sits between two adjacent ones.
  add("rug between floor and table",
      graph(kRoom, {obj("rug_1", {2.0, 1.5, 0.02}), obj("table_1", {1.2, 0.8, 0.75})},
            {edge("floor", "rug_1", P::kOn), edge("floor", "table_1", P::kOn), edge("rug_1", "table_1", P::kOn)}),
      ViolationKind::kAdjacencyConflict, "rug_1");
  add("stand between desk and monitor",
      graph(kRoom, {obj("desk_1", {1.4, 0.7, 0.75}), obj("stand_1", {0.5, 0.3, 0.1}), obj("monitor_1", {0.5, 0.2, 0.4})},
            {edge("floor", "desk_1", P::kOn), edge("desk_1", "stand_1", P::kOn), edge("desk_1", "monitor_1", P::kOn),
             edge("stand_1", "monitor_1", P::kOn)}),
      ViolationKind::kAdjacencyConflict, "stand_1");
  add("nightstand between bed and lamp",
      graph(kRoom, {obj("bed_1", {2.0, 1.6, 0.5}), obj("nightstand_1", {0.5, 0.4, 0.5}), obj("lamp_1", {0.3, 0.3, 0.5})},
            {edge("middle_of_room", "bed_1", P::kOn), edge("bed_1", "nightstand_1", P::kLeftOf),
             edge("bed_1", "lamp_1", P::kLeftOf), edge("nightstand_1", "lamp_1", P::kLeftOf)}),
      ViolationKind::kAdjacencyConflict, "nightstand_1");
  add("tray between table and vase",
      graph(kRoom, {obj("table_1", {1.0, 1.0, 0.75}), obj("tray_1", {0.5, 0.4, 0.05}), obj("vase_1", {0.2, 0.2, 0.3})},
            {edge("floor", "table_1", P::kOn), edge("table_1", "tray_1", P::kOn), edge("table_1", "vase_1", P::kOn),
             edge("tray_1", "vase_1", P::kOn)}),
      ViolationKind::kAdjacencyConflict, "tray_1");
  add("chair between sofa and side table",
      graph(kRoom, {obj("sofa_1", {2.0, 0.9, 0.8}), obj("chair_1", {0.7, 0.7, 0.9}), obj("side_table_1", {0.5, 0.5, 0.6})},
            {edge("floor", "sofa_1", P::kOn), edge("sofa_1", "chair_1", P::kRightOf),
             edge("sofa_1", "side_table_1", P::kRightOf), edge("chair_1", "side_table_1", P::kRightOf)}),
      ViolationKind::kAdjacencyConflict, "chair_1");

  // Size incompatibility.
  add("two chairs left of a small table",
      graph(kRoom, {obj("table_1", {1.0, 1.0, 0.75}), obj("chair_1", {0.6, 0.6, 0.9}), obj("chair_2", {0.6, 0.6, 0.9})},
            {edge("floor", "table_1", P::kOn), edge("table_1", "chair_1", P::kLeftOf),
             edge("table_1", "chair_2", P::kLeftOf), edge("chair_1", "chair_2", P::kLeftOf)}),
      ViolationKind::kSizeIncompatibility, "table_1");
  add("television wider than its stand",
      graph(kRoom, {obj("stand_1", {1.0, 0.4, 0.5}), obj("television_1", {1.4, 0.2, 0.8})},
            {edge("floor", "stand_1", P::kOn), edge("stand_1", "television_1", P::kOn)}),
      ViolationKind::kSizeIncompatibility, "stand_1");
  add("ottoman under a floor-standing sofa",
      graph(kRoom, {obj("sofa_1", {2.0, 0.9, 0.8}), obj("ottoman_1", {0.6, 0.6, 0.4})},
            {edge("floor", "sofa_1", P::kOn), edge("sofa_1", "ottoman_1", P::kUnder)}),
      ViolationKind::kSizeIncompatibility, "sofa_1");
  add("three boxes on a narrow shelf",
      graph(kRoom, {obj("shelf_1", {1.0, 0.4, 1.0}), obj("box_1", {0.4, 0.3, 0.3}), obj("box_2", {0.4, 0.3, 0.3}),
                    obj("box_3", {0.4, 0.3, 0.3})},
            {edge("floor", "shelf_1", P::kOn), edge("shelf_1", "box_1", P::kOn), edge("shelf_1", "box_2", P::kOn),
             edge("shelf_1", "box_3", P::kOn)}),
      ViolationKind::kSizeIncompatibility, "shelf_1");
  add("wardrobes longer than the east wall",
      graph(kRoom, {obj("wardrobe_1", {1.6, 0.6, 2.0}, Rotation::k270), obj("wardrobe_2", {1.6, 0.6, 2.0}, Rotation::k270)},
            {edge("wall_east", "wardrobe_1", P::kOn), edge("floor", "wardrobe_1", P::kOn),
             edge("wall_east", "wardrobe_2", P::kOn), edge("floor", "wardrobe_2", P::kOn)}),
      ViolationKind::kSizeIncompatibility, "wall_east");
  add("painting taller than the room",
      graph(kRoom, {obj("painting_1", {1.0, 0.05, 2.6}, Rotation::k180)}, {edge("wall_north", "painting_1", P::kOn)}),
      ViolationKind::kSizeIncompatibility, "wall_north");

  // Orphans.
  add("rug with no edges", graph(kRoom, {obj("rug_1", {2.0, 1.5, 0.02})}, {}), ViolationKind::kOrphan, "rug_1");
  add("lamp on an orphan table",
      graph(kRoom, {obj("table_1", {1.2, 0.8, 0.75}), obj("lamp_1", {0.3, 0.3, 0.5})},
            {edge("table_1", "lamp_1", P::kOn)}),
      ViolationKind::kOrphan, "lamp_1");
  add("plant next to a placed sofa, itself unplaced",
      graph(kRoom, {obj("sofa_1", {2.0, 0.9, 0.8}), obj("plant_1", {0.4, 0.4, 0.8})},
            {edge("floor", "sofa_1", P::kOn)}),
      ViolationKind::kOrphan, "plant_1");
  add("two-object cycle detached from the room",
      graph(kRoom, {obj("chair_1", {0.5, 0.5, 0.9}), obj("chair_2", {0.5, 0.5, 0.9})},
            {edge("chair_1", "chair_2", P::kLeftOf), edge("chair_2", "chair_1", P::kRightOf)}),
      ViolationKind::kOrphan, "chair_2");
  add("clock with only an outgoing edge",
      graph(kRoom, {obj("clock_1", {0.3, 0.1, 0.3}), obj("hook_1", {0.1, 0.1, 0.1})},
            {edge("clock_1", "hook_1", P::kUnder, kGap)}),
      ViolationKind::kOrphan, "clock_1");
  return out;
}

std::vector<SceneGraph> clean_fixtures() {
  std::vector<SceneGraph> out;
  const Room rooms[] = {{4.0, 3.0, 2.4}, {5.0, 4.0, 2.7}, {3.5, 3.5, 2.5}, {6.0, 4.5, 3.0}};
  for (const Room& room : rooms) {
    out.push_back(graph(room, {obj("bed_1", {2.0, 1.6, 0.5}), obj("nightstand_1", {0.5, 0.4, 0.5})},
                        {edge("floor", "bed_1", P::kOn), edge("bed_1", "nightstand_1", P::kLeftOf)}));
    out.push_back(graph(room,
                        {obj("desk_1", {1.4, 0.7, 0.75}, Rotation::k180), obj("monitor_1", {0.6, 0.2, 0.4}),
                         obj("chair_1", {0.5, 0.5, 0.9})},
                        {edge("wall_north", "desk_1", P::kOn), edge("floor", "desk_1", P::kOn),
                         edge("desk_1", "monitor_1", P::kOn), edge("desk_1", "chair_1", P::kInFront, kGap)}));
    out.push_back(graph(room,
                        {obj("sofa_1", {2.0, 0.9, 0.8}), obj("coffee_table_1", {1.0, 0.6, 0.45}),
                         obj("lamp_1", {0.3, 0.3, 1.5})},
                        {edge("wall_south", "sofa_1", P::kOn), edge("floor", "sofa_1", P::kOn),
                         edge("sofa_1", "coffee_table_1", P::kInFront, kGap), edge("sofa_1", "lamp_1", P::kRightOf)}));
    out.push_back(graph(room,
                        {obj("table_1", {1.6, 0.9, 0.75}), obj("chair_1", {0.5, 0.5, 0.9}, Rotation::k90),
                         obj("chair_2", {0.5, 0.5, 0.9}, Rotation::k270), obj("vase_1", {0.2, 0.2, 0.3})},
                        {edge("middle_of_room", "table_1", P::kOn), edge("table_1", "chair_1", P::kLeftOf),
                         edge("table_1", "chair_2", P::kRightOf), edge("table_1", "vase_1", P::kOn)}));
    out.push_back(graph(room,
                        {obj("wardrobe_1", {1.0, 0.6, 2.0}, Rotation::k180), obj("chandelier_1", {0.6, 0.6, 0.5}),
                         obj("rug_1", {2.0, 1.4, 0.02})},
                        {edge("wall_north", "wardrobe_1", P::kInTheCorner), edge("ceiling", "chandelier_1", P::kOn),
                         edge("middle_of_room", "rug_1", P::kOn)}));
  }
  return out;
}

}  // namespace roomgraph::testing
