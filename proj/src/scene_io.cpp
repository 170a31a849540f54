#include "roomgraph/scene_io.hpp"

#include "roomgraph/assets.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/json_schema.hpp"

namespace roomgraph {

using nlohmann::json;

namespace {

const SchemaValidator& entry_validator() {
  static const SchemaValidator v(json::parse(embedded_asset("schemas/engineer_object.schema.json")));
  return v;
}

const SchemaValidator& document_validator() {
  static const SchemaValidator v(json::parse(embedded_asset("schemas/scene_graph.schema.json")));
  return v;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

}  // namespace

json room_to_json(const Room& room) {
  return {{"width", room.width_x}, {"depth", room.depth_y}, {"height", room.height_z}};
}

Room room_from_json(const json& j) {
  try {
    return {j.at("width").get<double>(), j.at("depth").get<double>(), j.at("height").get<double>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("room: ") + e.what());
  }
}

json node_to_entry(const ObjectNode& node, const std::vector<Edge>& in_edges) {
  json placements = json::array();
  for (const Edge& e : in_edges) {
    placements.push_back({{"parent", e.parent},
                          {"preposition", std::string(to_string(e.preposition))},
                          {"adjacency", std::string(to_string(e.adjacency))}});
  }
  json entry = {
      {"new_object_id", node.id},
      {"name", node.name},
      {"style", node.style},
      {"material", node.material},
      {"size_in_meters", {{"Length", node.size.x}, {"Width", node.size.y}, {"Height", node.size.z}}},
      {"scene_graph", std::move(placements)},
      {"facing", node.facing_given ? std::string(facing_for_rotation(node.rotation)) : "none"},
  };
  if (!node.facing_given) entry["rotation"] = degrees(node.rotation);
  if (node.position) entry["position"] = {node.position->x, node.position->y, node.position->z};
  if (node.cluster_extents) {
    const Extents4& cs = *node.cluster_extents;
    entry["cluster_extents"] = {{"x_neg", cs.x_neg}, {"x_pos", cs.x_pos}, {"y_neg", cs.y_neg}, {"y_pos", cs.y_pos}};
  }
  return entry;
}

std::vector<std::string> engineer_entry_errors(const json& entry) {
  return entry_validator().validate(entry);
}

std::vector<std::string> scene_document_errors(const json& doc) {
  return document_validator().validate(doc);
}

ParsedEntry entry_from_json(const json& entry) {
  auto errors = engineer_entry_errors(entry);
  if (!errors.empty()) throw Error(ErrorCode::kParseError, join(errors));

  ParsedEntry out;
  ObjectNode& n = out.node;
  n.id = entry["new_object_id"].get<std::string>();
  n.name = entry["name"].get<std::string>();
  n.style = entry["style"].get<std::string>();
  n.material = entry["material"].get<std::string>();
  const json& size = entry["size_in_meters"];
  n.size = {size["Length"].get<double>(), size["Width"].get<double>(), size["Height"].get<double>()};

  const std::string facing = entry["facing"].get<std::string>();
  if (facing == "none") {
    n.facing_given = false;
    n.rotation = Rotation::k0;
    if (entry.contains("rotation") && !rotation_from_degrees(entry["rotation"].get<int>(), n.rotation)) {
      throw Error(ErrorCode::kParseError, n.id + ": rotation must be 0, 90, 180 or 270");
    }
  } else {
    n.facing_given = true;
    n.rotation = *rotation_for_facing(facing);
    if (entry.contains("rotation") && entry["rotation"].get<int>() != degrees(n.rotation)) {
      throw Error(ErrorCode::kParseError, n.id + ": rotation contradicts facing " + facing);
    }
  }
  if (entry.contains("position")) {
    const json& p = entry["position"];
    if (!p.is_array() || p.size() != 3) throw Error(ErrorCode::kParseError, n.id + ": position needs 3 numbers");
    n.position = Vec3{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
  }
  if (entry.contains("cluster_extents")) {
    const json& cs = entry["cluster_extents"];
    try {
      n.cluster_extents = Extents4{cs.at("x_neg").get<double>(), cs.at("x_pos").get<double>(),
                                   cs.at("y_neg").get<double>(), cs.at("y_pos").get<double>()};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, n.id + ": cluster_extents: " + e.what());
    }
  }
  for (const json& p : entry["scene_graph"]) {
    Edge e;
    e.parent = p["parent"].get<std::string>();
    e.child = n.id;
    e.preposition = *parse_preposition(p["preposition"].get<std::string>());
    e.adjacency = *parse_adjacency(p["adjacency"].get<std::string>());
    out.edges.push_back(std::move(e));
  }
  return out;
}

json graph_to_document(const SceneGraph& graph) {
  json objects = json::array();
  for (const ObjectNode& n : graph.nodes) {
    std::vector<Edge> in;
    for (const Edge& e : graph.edges) {
      if (e.child == n.id) in.push_back(e);
    }
    objects.push_back(node_to_entry(n, in));
  }
  return {{"room", room_to_json(graph.room)}, {"objects", std::move(objects)}};
}

SceneGraph graph_from_document(const json& doc) {
  auto errors = scene_document_errors(doc);
  if (!errors.empty()) throw Error(ErrorCode::kParseError, join(errors));
  SceneGraph g;
  g.room = room_from_json(doc["room"]);
  for (const json& entry : doc["objects"]) {
    ParsedEntry parsed = entry_from_json(entry);
    g.nodes.push_back(std::move(parsed.node));
    for (Edge& e : parsed.edges) g.edges.push_back(std::move(e));
  }
  return g;
}

json validation_report_to_json(const ValidationReport& report) {
  json out = json::array();
  for (const GraphError& e : report) {
    json item = {{"kind", std::string(to_string(e.kind))}, {"nodes", e.nodes}, {"message", e.message}};
    if (e.edge_index >= 0) item["edge_index"] = e.edge_index;
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace roomgraph
