#include "roomgraph/composer.hpp"

#include <cstdio>

#include "roomgraph/error.hpp"
#include "roomgraph/prompts.hpp"

namespace roomgraph {

using json = nlohmann::json;

namespace {

json vec(Vec3 v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  return s == "-0.0" ? "0.0" : s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string placeholder_id(const std::string& node) { return "placeholder:" + node; }

}  // namespace

json retrievals_to_json(const std::vector<Retrieval>& retrievals) {
  json out = json::array();
  for (const Retrieval& r : retrievals) {
    json candidates = json::array();
    for (const Match& m : r.candidates) candidates.push_back({{"asset_id", m.id}, {"similarity", m.similarity}});
    out.push_back({{"node_id", r.node_id},
                   {"asset_id", r.asset_id},
                   {"asset_uri", r.asset_uri},
                   {"similarity", r.similarity},
                   {"native_size", vec(r.native_size)},
                   {"placeholder", r.placeholder},
                   {"overridden", r.overridden},
                   {"candidates", std::move(candidates)}});
  }
  return out;
}

std::vector<Retrieval> retrievals_from_json(const json& j) {
  std::vector<Retrieval> out;
  try {
    for (const json& r : j) {
      Retrieval x{r.at("node_id").get<std::string>(), r.at("asset_id").get<std::string>(),
                  r.at("asset_uri").get<std::string>(),  r.at("similarity").get<double>(),
                  vec3(r.at("native_size")),            r.at("placeholder").get<bool>(),
                  r.at("overridden").get<bool>(),        {}};
      for (const json& m : r.at("candidates")) {
        x.candidates.push_back({m.at("asset_id").get<std::string>(), m.at("similarity").get<double>()});
      }
      out.push_back(std::move(x));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("retrievals: ") + e.what());
  }
  return out;
}

std::vector<Retrieval> retrieve_assets(const SceneGraph& graph, const AssetIndex* index, Embedder* embedder, int k,
                                       const std::map<std::string, std::string>& overrides) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  for (const auto& [node, asset] : overrides) {
    if (!graph.find(node)) throw Error(ErrorCode::kInvalidArgument, "asset override for unknown node " + node);
    if (!index || !index->find(asset)) throw Error(ErrorCode::kInvalidArgument, "unknown asset " + asset);
  }
  std::vector<const ObjectNode*> nodes;
  for (const ObjectNode& n : graph.nodes) nodes.push_back(&n);
  std::sort(nodes.begin(), nodes.end(), [](const ObjectNode* a, const ObjectNode* b) { return a->id < b->id; });

  std::vector<Retrieval> out;
  for (const ObjectNode* n : nodes) {
    Retrieval r;
    r.node_id = n->id;
    if (index && embedder) {
      try {
        r.candidates = retrieve(*index, embed_description(*n, *embedder), k);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnknownDescription) throw;
      }
    }
    const AssetRecord* chosen = nullptr;
    if (auto it = overrides.find(n->id); it != overrides.end()) {
      chosen = index->find(it->second);
      r.overridden = true;
    } else if (!r.candidates.empty()) {
      chosen = index->find(r.candidates.front().id);
      r.similarity = r.candidates.front().similarity;
    }
    if (chosen) {
      r.asset_id = chosen->id;
      r.asset_uri = chosen->uri;
      r.native_size = chosen->native_size;
      for (const Match& m : r.candidates) {
        if (m.id == chosen->id) r.similarity = m.similarity;
      }
    } else {
      r.asset_id = placeholder_id(n->id);
      r.native_size = n->size;
      r.placeholder = true;
    }
    out.push_back(std::move(r));
  }
  return out;
}

json manifest_to_json(const SceneManifest& m) {
  json objects = json::array();
  for (const ManifestObject& o : m.objects) {
    objects.push_back({{"id", o.id},
                       {"name", o.name},
                       {"style_material", o.style_material},
                       {"asset_id", o.asset_id},
                       {"asset_uri", o.asset_uri},
                       {"position", vec(o.position)},
                       {"rotation", o.rotation},
                       {"scale", vec(o.scale)},
                       {"anisotropy", o.anisotropy},
                       {"size", vec(o.size)},
                       {"bbox", {{"min", vec(o.bbox.min)}, {"max", vec(o.bbox.max)}}}});
  }
  json views = json::array();
  for (const CameraView& v : m.views) {
    views.push_back({{"name", v.name},
                     {"eye", vec(v.eye)},
                     {"target", vec(v.target)},
                     {"up", vec(v.up)},
                     {"fov_deg", v.fov_deg}});
  }
  return {{"format", "roomgraph.manifest"},
          {"version", 1},
          {"room", {{"width", m.room.width_x}, {"depth", m.room.depth_y}, {"height", m.room.height_z}}},
          {"objects", std::move(objects)},
          {"views", std::move(views)},
          {"metadata", {{"seed", m.seed}, {"config_hash", m.config_hash}}}};
}

SceneManifest manifest_from_json(const json& j) {
  const auto errors = shipped_schema("manifest").validate(j);
  if (!errors.empty()) throw Error(ErrorCode::kParseError, "manifest: " + errors.front());
  SceneManifest m;
  const json& r = j["room"];
  m.room = {r["width"].get<double>(), r["depth"].get<double>(), r["height"].get<double>()};
  for (const json& o : j["objects"]) {
    m.objects.push_back({o["id"].get<std::string>(), o["name"].get<std::string>(),
                         o["style_material"].get<std::string>(), o["asset_id"].get<std::string>(),
                         o.value("asset_uri", std::string()), vec3(o["position"]), o["rotation"].get<int>(),
                         vec3(o["scale"]), o.value("anisotropy", 1.0), vec3(o["size"]),
                         Box3{vec3(o["bbox"]["min"]), vec3(o["bbox"]["max"])}});
  }
  for (const json& v : j["views"]) {
    m.views.push_back({v["name"].get<std::string>(), vec3(v["eye"]), vec3(v["target"]), vec3(v["up"]),
                       v["fov_deg"].get<double>()});
  }
  m.seed = j["metadata"]["seed"].get<uint64_t>();
  m.config_hash = j["metadata"]["config_hash"].get<std::string>();
  return m;
}

std::vector<CameraView> default_views(const Room& room) {
  const Vec3 target{room.width_x / 2, room.depth_y / 2, room.height_z / 4};
  const double z = room.height_z * 0.9;
  return {{"southwest_corner", {0.0, 0.0, z}, target, {0, 0, 1}, 60.0},
          {"northeast_corner", {room.width_x, room.depth_y, z}, target, {0, 0, 1}, 60.0}};
}

SceneManifest export_manifest(const Layout& layout, const std::vector<Retrieval>& retrievals, const SceneGraph& graph,
                              const std::string& config_hash) {
  if (!layout.solved()) throw Error(ErrorCode::kUnsolvedLayout, "layout is not solved: " + layout.message);
  SceneManifest m;
  m.room = layout.room;
  m.views = default_views(layout.room);
  m.seed = layout.seed;
  m.config_hash = config_hash;
  for (const Placement& p : layout.placements) {
    const ObjectNode* n = graph.find(p.id);
    if (!n) throw Error(ErrorCode::kMissingInput, "no graph node for placement " + p.id);
    const auto r = std::find_if(retrievals.begin(), retrievals.end(),
                                [&](const Retrieval& x) { return x.node_id == p.id; });
    if (r == retrievals.end()) throw Error(ErrorCode::kMissingInput, "no retrieval for " + p.id);
    const AssetFit fit = fit_asset(r->native_size, n->size);
    m.objects.push_back({p.id, n->name, n->style_material(), r->asset_id, r->asset_uri, p.position,
                         degrees(p.rotation), fit.scale, fit.anisotropy, n->size, p.box()});
  }
  return m;
}

std::string render_floor_plan(const Layout& layout, const SceneGraph& graph) {
  if (!layout.solved()) throw Error(ErrorCode::kUnsolvedLayout, "layout is not solved: " + layout.message);
  const Room& room = layout.room;
  const double w = room.width_x * kPixelsPerMeter + 2 * kPlanMargin;
  const double h = room.depth_y * kPixelsPerMeter + 2 * kPlanMargin;
  const auto sx = [&](double x) { return px(kPlanMargin + x * kPixelsPerMeter); };
  const auto sy = [&](double y) { return px(kPlanMargin + (room.depth_y - y) * kPixelsPerMeter); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) + "\" height=\"" + px(h) + "\" viewBox=\"0 0 " +
         px(w) + " " + px(h) + "\" data-px-per-m=\"" + px(kPixelsPerMeter) + "\" data-margin=\"" + px(kPlanMargin) +
         "\">\n";
  out += "<rect class=\"room\" x=\"" + sx(0) + "\" y=\"" + sy(room.depth_y) + "\" width=\"" +
         px(room.width_x * kPixelsPerMeter) + "\" height=\"" + px(room.depth_y * kPixelsPerMeter) +
         "\" fill=\"none\" stroke=\"#222\" stroke-width=\"2\"/>\n";
  for (const Placement& p : layout.placements) {
    const Box3 b = p.box();
    const ObjectNode* n = graph.find(p.id);
    const std::string label = n ? n->name : p.id;
    out += "<g class=\"object\" id=\"" + xml_escape(p.id) + "\" data-rotation=\"" + std::to_string(degrees(p.rotation)) +
           "\">\n";
    out += "<polygon points=\"" + sx(b.min.x) + "," + sy(b.min.y) + " " + sx(b.max.x) + "," + sy(b.min.y) + " " +
           sx(b.max.x) + "," + sy(b.max.y) + " " + sx(b.min.x) + "," + sy(b.max.y) +
           "\" fill=\"#dde6f0\" stroke=\"#345\" stroke-width=\"1\"/>\n";
    const Heading f = forward_heading(p.rotation);
    Vec3 edge = p.position;
    edge[axis_of(f)] += sign_of(f) * p.half[axis_of(f)];
    Vec3 tip = edge;
    tip[axis_of(f)] += sign_of(f) * 0.15;
    out += "<line class=\"facing\" x1=\"" + sx(edge.x) + "\" y1=\"" + sy(edge.y) + "\" x2=\"" + sx(tip.x) +
           "\" y2=\"" + sy(tip.y) + "\" stroke=\"#c33\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + sx(p.position.x) + "\" y=\"" + sy(p.position.y) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + xml_escape(label) + "</text>\n";
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace roomgraph
