#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roomgraph/geometry.hpp"

namespace roomgraph {

// Coordinate frame: origin at the southwest floor corner, +x east, +y north,
// +z up. Walls are zero-thickness planes on the room faces.
struct Room {
  double width_x = 0.0;
  double depth_y = 0.0;
  double height_z = 0.0;

  bool valid() const { return width_x > 0 && depth_y > 0 && height_z > 0; }
  Box3 box() const { return {{0, 0, 0}, {width_x, depth_y, height_z}}; }

  friend bool operator==(const Room&, const Room&) = default;
};

enum class LayoutNode { kFloor, kCeiling, kWallNorth, kWallSouth, kWallEast, kWallWest, kMiddleOfRoom };

inline constexpr std::array<LayoutNode, 7> kLayoutNodes = {
    LayoutNode::kFloor,    LayoutNode::kCeiling,  LayoutNode::kWallNorth,   LayoutNode::kWallSouth,
    LayoutNode::kWallEast, LayoutNode::kWallWest, LayoutNode::kMiddleOfRoom};

std::string_view layout_node_id(LayoutNode node);
std::optional<LayoutNode> layout_node_from_id(std::string_view id);
bool is_layout_id(std::string_view id);
bool is_wall(LayoutNode node);
// Inward-pointing normal is the opposite of this heading.
Heading wall_outward(LayoutNode wall);
std::optional<LayoutNode> wall_toward(Heading outward);

enum class Preposition { kOn, kLeftOf, kRightOf, kInFront, kBehind, kUnder, kAbove, kInTheCorner };
enum class Adjacency { kAdjacent, kNotAdjacent };

std::string_view to_string(Preposition p);
std::string_view to_string(Adjacency a);
// Accepts canonical ids and the spaced forms agents tend to emit ("left of").
std::optional<Preposition> parse_preposition(std::string_view text);
std::optional<Adjacency> parse_adjacency(std::string_view text);

bool is_lateral(Preposition p);
bool allowed_from_layout(Preposition p);
bool allowed_between_objects(Preposition p);
// Local direction of a lateral preposition in the parent's frame.
LocalDir lateral_direction(Preposition p);
std::optional<Preposition> lateral_preposition(LocalDir d);

// Facing wall as emitted by the architect ("north_wall") to rotation.
std::optional<Rotation> rotation_for_facing(std::string_view facing);
std::string_view facing_for_rotation(Rotation r);

struct ObjectNode {
  std::string id;
  std::string name;
  std::string style;
  std::string material;
  Vec3 size;  // local frame: x = Length (right), y = Width (front), z = Height
  Rotation rotation = Rotation::k0;
  bool facing_given = true;
  std::optional<Vec3> position;
  std::optional<Extents4> cluster_extents;  // local frame, measured from center

  std::string style_material() const;

  friend bool operator==(const ObjectNode&, const ObjectNode&) = default;
};

struct Edge {
  std::string parent;
  std::string child;
  Preposition preposition = Preposition::kOn;
  Adjacency adjacency = Adjacency::kAdjacent;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct SceneGraph {
  Room room;
  std::vector<ObjectNode> nodes;
  std::vector<Edge> edges;

  const ObjectNode* find(std::string_view id) const;
  ObjectNode* find(std::string_view id);
  bool has_node(std::string_view id) const { return is_layout_id(id) || find(id) != nullptr; }
  std::vector<const Edge*> in_edges(std::string_view child) const;
  std::vector<const Edge*> out_edges(std::string_view parent) const;

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

// Lower-case snake form of an object name, used to mint "name_k" ids.
std::string id_stem(std::string_view name);

}  // namespace roomgraph
