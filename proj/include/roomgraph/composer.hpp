#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/retrieval.hpp"
#include "roomgraph/scene.hpp"
#include "roomgraph/solver.hpp"

namespace roomgraph {

struct Retrieval {
  std::string node_id;
  std::string asset_id;  // "placeholder:<node_id>" when nothing was retrieved
  std::string asset_uri;
  double similarity = 0.0;
  Vec3 native_size;  // the node's own size for placeholders
  bool placeholder = false;
  bool overridden = false;
  std::vector<Match> candidates;  // top-k, best first

  friend bool operator==(const Retrieval&, const Retrieval&) = default;
};

nlohmann::json retrievals_to_json(const std::vector<Retrieval>& retrievals);
std::vector<Retrieval> retrievals_from_json(const nlohmann::json& j);

// One retrieval per node, in id order. Without an index or embedder every
// node gets a placeholder; so does a node whose description the embedder
// does not know. `overrides` pins node -> asset id and must name indexed
// assets (Error(kInvalidArgument) otherwise).
std::vector<Retrieval> retrieve_assets(const SceneGraph& graph, const AssetIndex* index, Embedder* embedder, int k = 1,
                                       const std::map<std::string, std::string>& overrides = {});

struct ManifestObject {
  std::string id;
  std::string name;
  std::string style_material;
  std::string asset_id;
  std::string asset_uri;
  Vec3 position;
  int rotation = 0;  // degrees clockwise from north
  Vec3 scale;
  double anisotropy = 1.0;
  Vec3 size;  // local frame
  Box3 bbox;  // world frame

  friend bool operator==(const ManifestObject&, const ManifestObject&) = default;
};

struct CameraView {
  std::string name;
  Vec3 eye;
  Vec3 target;
  Vec3 up{0, 0, 1};
  double fov_deg = 60.0;

  friend bool operator==(const CameraView&, const CameraView&) = default;
};

struct SceneManifest {
  Room room;
  std::vector<ManifestObject> objects;  // placement order (by id)
  std::vector<CameraView> views;
  uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const SceneManifest&, const SceneManifest&) = default;
};

nlohmann::json manifest_to_json(const SceneManifest& manifest);
// Validates against the manifest schema. Throws Error(kParseError).
SceneManifest manifest_from_json(const nlohmann::json& j);

// Two views from opposite upper corners looking at the room center.
std::vector<CameraView> default_views(const Room& room);

// Throws Error(kUnsolvedLayout), Error(kMissingInput) when a placement has
// no node or retrieval.
SceneManifest export_manifest(const Layout& layout, const std::vector<Retrieval>& retrievals, const SceneGraph& graph,
                              const std::string& config_hash = "");

inline constexpr double kPixelsPerMeter = 100.0;
inline constexpr double kPlanMargin = 20.0;  // px

// Top-down SVG: room outline, one rectangle per object with its name and a
// tick on the front edge. x is east, screen y grows south. Coordinates are
// printed with one decimal (1 mm). Throws Error(kUnsolvedLayout).
std::string render_floor_plan(const Layout& layout, const SceneGraph& graph);

}  // namespace roomgraph
