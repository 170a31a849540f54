// Regenerates tests/fixtures: canned model replies for the study and bedroom
// scripts, the asset indexes, the embedding table and the run configs.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "design_scripts.hpp"
#include "roomgraph/agents.hpp"
#include "roomgraph/retrieval.hpp"
#include "roomgraph/scene_io.hpp"

using namespace roomgraph;
using namespace roomgraph::testing;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

json request_doc(const DesignRequest& r) {
  return {{"prompt", r.user_text}, {"room", room_to_json(r.room)}, {"n", r.object_count}};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <fixtures dir>\n";
    return 1;
  }
  const fs::path root = argv[1];
  try {
    fs::remove_all(root / "canned");
    for (const auto& [name, script] : {std::pair{"study", study_script()}, std::pair{"bedroom", bedroom_script()}}) {
      ScriptedBackend scripted(script_responder(script));
      RecordingBackend recorder(scripted, root / "canned");
      const PipelineResult r = run_pipeline(script.request, recorder);
      write(root / "requests" / (std::string(name) + ".json"), request_doc(script.request).dump(2) + "\n");
      write(root / "graphs" / (std::string(name) + ".json"), graph_to_document(r.graph).dump(2) + "\n");
    }

    const AssetIndex index = build_index(script_asset_records());
    fs::create_directories(root / "assets");
    write_index(index, root / "assets" / "assets.rgai");
    std::vector<AssetRecord> three;
    for (const AssetRecord& r : script_asset_records()) {
      if (r.id == "desk_walnut_01" || r.id == "desk_pine_02" || r.id == "chair_office_01") three.push_back(r);
    }
    write_index(build_index(three), root / "assets" / "three.rgai");
    write(root / "assets" / "embeddings.json", json(script_embedding_table()).dump(2) + "\n");

    const std::string common =
        "[backend]\n"
        "kind = canned\n"
        "fixtures = canned\n"
        "\n"
        "[retrieval]\n"
        "embedder = table\n"
        "table = assets/embeddings.json\n";
    write(root / "run.ini", common + "index = assets/assets.rgai\n\n[output]\nroot = designs\n");
    write(root / "search.ini", common + "index = assets/three.rgai\n\n[output]\nroot = designs\n");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
