#include "roomgraph/scene.hpp"

#include <algorithm>
#include <cctype>

#include "roomgraph/error.hpp"

namespace roomgraph {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kCyclicGraph: return "CyclicGraph";
    case ErrorCode::kUnreachable: return "Unreachable";
    case ErrorCode::kParentUnplaced: return "ParentUnplaced";
    case ErrorCode::kUnsat: return "Unsat";
    case ErrorCode::kSchemaRetryExhausted: return "SchemaRetryExhausted";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmbedderUnavailable: return "EmbedderUnavailable";
    case ErrorCode::kUnknownDescription: return "UnknownDescription";
    case ErrorCode::kUnsolvedLayout: return "UnsolvedLayout";
    case ErrorCode::kUnknownStage: return "UnknownStage";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kClientUnavailable: return "ClientUnavailable";
    case ErrorCode::kMalformedGrade: return "MalformedGrade";
    case ErrorCode::kImagesRequired: return "ImagesRequired";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string normalize_token(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u) || c == '-' || c == '_') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

}  // namespace

std::string_view layout_node_id(LayoutNode node) {
  switch (node) {
    case LayoutNode::kFloor: return "floor";
    case LayoutNode::kCeiling: return "ceiling";
    case LayoutNode::kWallNorth: return "wall_north";
    case LayoutNode::kWallSouth: return "wall_south";
    case LayoutNode::kWallEast: return "wall_east";
    case LayoutNode::kWallWest: return "wall_west";
    case LayoutNode::kMiddleOfRoom: return "middle_of_room";
  }
  return "floor";
}

std::optional<LayoutNode> layout_node_from_id(std::string_view id) {
  for (LayoutNode n : kLayoutNodes) {
    if (layout_node_id(n) == id) return n;
  }
  return std::nullopt;
}

bool is_layout_id(std::string_view id) { return layout_node_from_id(id).has_value(); }

bool is_wall(LayoutNode node) {
  return node == LayoutNode::kWallNorth || node == LayoutNode::kWallSouth ||
         node == LayoutNode::kWallEast || node == LayoutNode::kWallWest;
}

Heading wall_outward(LayoutNode wall) {
  switch (wall) {
    case LayoutNode::kWallNorth: return Heading::kPosY;
    case LayoutNode::kWallSouth: return Heading::kNegY;
    case LayoutNode::kWallEast: return Heading::kPosX;
    case LayoutNode::kWallWest: return Heading::kNegX;
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "not a wall: " + std::string(layout_node_id(wall)));
}

std::optional<LayoutNode> wall_toward(Heading outward) {
  switch (outward) {
    case Heading::kPosY: return LayoutNode::kWallNorth;
    case Heading::kNegY: return LayoutNode::kWallSouth;
    case Heading::kPosX: return LayoutNode::kWallEast;
    case Heading::kNegX: return LayoutNode::kWallWest;
  }
  return std::nullopt;
}

std::string_view to_string(Preposition p) {
  switch (p) {
    case Preposition::kOn: return "on";
    case Preposition::kLeftOf: return "left_of";
    case Preposition::kRightOf: return "right_of";
    case Preposition::kInFront: return "in_front";
    case Preposition::kBehind: return "behind";
    case Preposition::kUnder: return "under";
    case Preposition::kAbove: return "above";
    case Preposition::kInTheCorner: return "in_the_corner";
  }
  return "on";
}

std::string_view to_string(Adjacency a) {
  return a == Adjacency::kAdjacent ? "adjacent" : "not_adjacent";
}

std::optional<Preposition> parse_preposition(std::string_view text) {
  const std::string t = normalize_token(text);
  if (t == "on") return Preposition::kOn;
  if (t == "left_of" || t == "left" || t == "on_the_left_of") return Preposition::kLeftOf;
  if (t == "right_of" || t == "right" || t == "on_the_right_of") return Preposition::kRightOf;
  if (t == "in_front" || t == "in_front_of") return Preposition::kInFront;
  if (t == "behind") return Preposition::kBehind;
  if (t == "under" || t == "below") return Preposition::kUnder;
  if (t == "above") return Preposition::kAbove;
  if (t == "in_the_corner" || t == "in_corner") return Preposition::kInTheCorner;
  return std::nullopt;
}

std::optional<Adjacency> parse_adjacency(std::string_view text) {
  const std::string t = normalize_token(text);
  if (t == "adjacent") return Adjacency::kAdjacent;
  if (t == "not_adjacent") return Adjacency::kNotAdjacent;
  return std::nullopt;
}

bool is_lateral(Preposition p) {
  return p == Preposition::kLeftOf || p == Preposition::kRightOf || p == Preposition::kInFront ||
         p == Preposition::kBehind;
}

bool allowed_from_layout(Preposition p) {
  return p == Preposition::kOn || p == Preposition::kInTheCorner;
}

bool allowed_between_objects(Preposition p) { return p != Preposition::kInTheCorner; }

LocalDir lateral_direction(Preposition p) {
  switch (p) {
    case Preposition::kLeftOf: return LocalDir::kLeft;
    case Preposition::kRightOf: return LocalDir::kRight;
    case Preposition::kInFront: return LocalDir::kFront;
    case Preposition::kBehind: return LocalDir::kBack;
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "not a lateral preposition: " + std::string(to_string(p)));
}

std::optional<Preposition> lateral_preposition(LocalDir d) {
  switch (d) {
    case LocalDir::kLeft: return Preposition::kLeftOf;
    case LocalDir::kRight: return Preposition::kRightOf;
    case LocalDir::kFront: return Preposition::kInFront;
    case LocalDir::kBack: return Preposition::kBehind;
  }
  return std::nullopt;
}

std::optional<Rotation> rotation_for_facing(std::string_view facing) {
  const std::string t = normalize_token(facing);
  if (t == "north_wall" || t == "wall_north" || t == "north") return Rotation::k0;
  if (t == "east_wall" || t == "wall_east" || t == "east") return Rotation::k90;
  if (t == "south_wall" || t == "wall_south" || t == "south") return Rotation::k180;
  if (t == "west_wall" || t == "wall_west" || t == "west") return Rotation::k270;
  return std::nullopt;
}

std::string_view facing_for_rotation(Rotation r) {
  switch (r) {
    case Rotation::k0: return "north_wall";
    case Rotation::k90: return "east_wall";
    case Rotation::k180: return "south_wall";
    case Rotation::k270: return "west_wall";
  }
  return "north_wall";
}

std::string ObjectNode::style_material() const {
  if (style.empty()) return material;
  if (material.empty()) return style;
  return style + " " + material;
}

const ObjectNode* SceneGraph::find(std::string_view id) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const ObjectNode& n) { return n.id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

ObjectNode* SceneGraph::find(std::string_view id) {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const ObjectNode& n) { return n.id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

std::vector<const Edge*> SceneGraph::in_edges(std::string_view child) const {
  std::vector<const Edge*> out;
  for (const Edge& e : edges) {
    if (e.child == child) out.push_back(&e);
  }
  return out;
}

std::vector<const Edge*> SceneGraph::out_edges(std::string_view parent) const {
  std::vector<const Edge*> out;
  for (const Edge& e : edges) {
    if (e.parent == parent) out.push_back(&e);
  }
  return out;
}

std::string id_stem(std::string_view name) {
  std::string out;
  for (char c : name) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "object" : out;
}

}  // namespace roomgraph
