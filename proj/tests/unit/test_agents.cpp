#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <memory>

#include "design_scripts.hpp"
#include "roomgraph/agents.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/scene_io.hpp"

using namespace roomgraph;
using namespace roomgraph::testing;
using json = nlohmann::json;

namespace {

ScriptedBackend::Responder replies(std::vector<std::string> texts) {
  auto i = std::make_shared<size_t>(0);
  return [texts, i](const GenerationRequest&) { return texts[std::min(texts.size() - 1, (*i)++)]; };
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

const Room kRoom{4.0, 3.0, 2.4};

std::string three_proposals() {
  return R"({"objects": [
    {"name": "bed", "architecture_style": "modern", "material": "wood",
     "bounding_box_size": {"Length": 2.0, "Width": 1.6, "Height": 0.5}, "quantity": 1},
    {"name": "nightstand", "architecture_style": "modern", "material": "oak",
     "bounding_box_size": {"Length": 0.45, "Width": 0.4, "Height": 0.55}, "quantity": 2},
    {"name": "lamp", "architecture_style": "industrial", "material": "metal",
     "bounding_box_size": {"Length": 0.3, "Width": 0.3, "Height": 0.5}, "quantity": 1}]})";
}

std::vector<std::string> ids_of(const SceneGraph& g) {
  std::vector<std::string> out;
  for (const ObjectNode& n : g.nodes) out.push_back(n.id);
  return out;
}

}  // namespace

TEST_CASE("designer parses a three-proposal reply") {
  ScriptedBackend backend(replies({three_proposals()}));
  StageTranscript t;
  auto p = run_designer({"a bedroom", kRoom, 3}, backend, {}, &t);
  REQUIRE(p.size() == 3);
  CHECK(p[0].name == "bed");
  CHECK(p[0].size == Vec3{2.0, 1.6, 0.5});
  CHECK(p[1].quantity == 2);
  CHECK(p[2].material == "metal");
  CHECK(t.retry_count == 0);
  CHECK(t.calls.size() == 1);
  CHECK(t.system_prompt.find("Suggest 3 essential") != std::string::npos);
  CHECK(t.output == proposals_to_json(p));
}

TEST_CASE("designer with n = 0 accepts an empty list") {
  ScriptedBackend backend(replies({R"({"objects": []})"}));
  CHECK(run_designer({"nothing", kRoom, 0}, backend).empty());
}

TEST_CASE("designer retries twice on a missing quantity") {
  std::string bad = three_proposals();
  bad.replace(bad.find(R"(, "quantity": 1})"), 16, "}");
  ScriptedBackend backend(replies({bad, bad, three_proposals()}));
  StageTranscript t;
  auto p = run_designer({"a bedroom", kRoom, 3}, backend, {}, &t);
  CHECK(p.size() == 3);
  CHECK(t.retry_count == 2);
  REQUIRE(t.calls.size() == 3);
  CHECK(!t.calls[0].errors.empty());
  CHECK(t.calls[1].user_message.find("quantity") != std::string::npos);
  CHECK(t.calls[2].errors.empty());
}

TEST_CASE("designer rejects door and window objects") {
  const std::string curtains = R"({"objects": [{"name": "Curtains", "architecture_style": "modern",
    "material": "linen", "bounding_box_size": {"Length": 2, "Width": 0.1, "Height": 2.2}, "quantity": 1}]})";
  ScriptedBackend backend(replies({curtains, three_proposals()}));
  StageTranscript t;
  CHECK(run_designer({"a bedroom", kRoom, 3}, backend, {}, &t).size() == 3);
  CHECK(t.retry_count == 1);
  CHECK(t.calls[0].errors[0].find("doors or windows") != std::string::npos);
  CHECK(is_opening_related("sliding door"));
  CHECK(is_opening_related("Window seat"));
  CHECK(is_opening_related("roller blinds"));
  CHECK_FALSE(is_opening_related("bookshelf"));
}

TEST_CASE("designer gives up after max retries") {
  ScriptedBackend backend(replies({"no json here"}));
  AgentOptions opts;
  opts.max_retries = 2;
  StageTranscript t;
  CHECK(code_of([&] { run_designer({"x", kRoom, 2}, backend, opts, &t); }) == ErrorCode::kSchemaRetryExhausted);
  CHECK(backend.calls() == 3);
  CHECK(t.retry_count == 2);
}

TEST_CASE("backend failures propagate") {
  ScriptedBackend backend([](const GenerationRequest&) -> std::string {
    throw Error(ErrorCode::kBackendUnavailable, "down");
  });
  CHECK(code_of([&] { run_designer({"x", kRoom, 2}, backend); }) == ErrorCode::kBackendUnavailable);
  CHECK(code_of([&] { run_designer({"x", kRoom, -1}, backend); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("quantities expand to numbered instances") {
  auto p = study_script().proposals;
  auto inst = expand_instances(p);
  std::vector<std::string> ids;
  for (const Instance& i : inst) ids.push_back(i.id);
  CHECK(ids == std::vector<std::string>{"desk_1", "office_chair_1", "desk_lamp_1", "bookshelf_1", "bookshelf_2",
                                        "rug_1"});
  CHECK(inst[4].proposal == 3);
}

TEST_CASE("anchor phrases resolve to node ids") {
  auto inst = expand_instances(study_script().proposals);
  using V = std::vector<std::string>;
  CHECK(resolve_anchor("south wall", inst) == V{"wall_south"});
  CHECK(resolve_anchor("south_wall", inst) == V{"wall_south"});
  CHECK(resolve_anchor("the East Wall", inst) == V{"wall_east"});
  CHECK(resolve_anchor("wall_west", inst) == V{"wall_west"});
  CHECK(resolve_anchor("the middle of the room", inst) == V{"middle_of_room"});
  CHECK(resolve_anchor("center of the floor", inst) == V{"middle_of_room"});
  CHECK(resolve_anchor("floor", inst) == V{"floor"});
  CHECK(resolve_anchor("the ceiling", inst) == V{"ceiling"});
  CHECK(resolve_anchor("northwest corner", inst) == V{"wall_north", "wall_west"});
  CHECK(resolve_anchor("the south-east corner", inst) == V{"wall_east", "wall_south"});
  CHECK(resolve_anchor("NE corner", inst) == V{"wall_east", "wall_north"});
  CHECK(resolve_anchor("north south corner", inst).empty());
  CHECK(resolve_anchor("corner", inst).empty());
  CHECK(resolve_anchor("desk_1", inst) == V{"desk_1"});
  CHECK(resolve_anchor("desk 1", inst) == V{"desk_1"});
  CHECK(resolve_anchor("the desk_1", inst) == V{"desk_1"});
  CHECK(resolve_anchor("desk", inst) == V{"desk_1"});
  CHECK(resolve_anchor("bookshelf", inst).empty());
  CHECK(resolve_anchor("garden", inst).empty());
}

TEST_CASE("facing phrases normalize") {
  CHECK(normalize_facing("north_wall") == "north_wall");
  CHECK(normalize_facing("facing the South wall") == "south_wall");
  CHECK(normalize_facing("west") == "west_wall");
  CHECK(normalize_facing("none") == "none");
  CHECK(normalize_facing("") == "none");
  CHECK(normalize_facing("the window") == std::nullopt);
  CHECK(normalize_facing("north east") == std::nullopt);
}

TEST_CASE("architect yields one statement per instance") {
  auto s = study_script();
  ScriptedBackend backend(replies({architect_reply(s).dump()}));
  StageTranscript t;
  auto st = run_architect(s.proposals, s.request, backend, {}, &t);
  REQUIRE(st.size() == 6);
  for (size_t i = 0; i < st.size(); ++i) {
    CHECK(st[i].instance == s.statements[i].instance);
    CHECK(st[i].facing == s.statements[i].facing);
    REQUIRE(st[i].placement.size() == s.statements[i].placement.size());
    CHECK(st[i].placement[0].preposition == s.statements[i].placement[0].preposition);
    CHECK(st[i].placement[0].proximity == s.statements[i].placement[0].proximity);
  }
  CHECK(statements_from_json(t.output).size() == 6);
  CHECK(t.system_prompt.find("Adjacent: The object is physically contacting") != std::string::npos);
}

TEST_CASE("architect retries on a missing instance or an unknown anchor") {
  auto s = study_script();
  json short_reply = architect_reply(s);
  short_reply["objects"][3]["instances"].erase(1);
  json bad_anchor = architect_reply(s);
  bad_anchor["objects"][0]["instances"][0]["placement"][0]["anchor"] = "the garden";
  ScriptedBackend backend(replies({short_reply.dump(), bad_anchor.dump(), architect_reply(s).dump()}));
  StageTranscript t;
  CHECK(run_architect(s.proposals, s.request, backend, {}, &t).size() == 6);
  CHECK(t.retry_count == 2);
  CHECK(t.calls[0].errors[0].find("needs 2 instances") != std::string::npos);
  CHECK(t.calls[1].errors[0].find("unknown anchor") != std::string::npos);
  CHECK(code_of([&] { run_architect({}, s.request, backend); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("engineer maps a middle-of-room desk with its facing") {
  std::vector<ObjectProposal> p = {{"desk", "modern", "oak", {1.2, 0.6, 0.75}, 1}};
  std::vector<PlacementStatement> st = {
      {"desk_1", {{Preposition::kOn, "middle of the room", Adjacency::kAdjacent}}, "facing north_wall"}};
  DesignScript script{{"", kRoom, 1}, p, st};
  ScriptedBackend backend(script_responder(script));
  auto g = run_engineer(p, st, kRoom, backend);
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].id == "desk_1");
  CHECK(g.nodes[0].rotation == Rotation::k0);
  CHECK(g.nodes[0].facing_given);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == Edge{"middle_of_room", "desk_1", Preposition::kOn, Adjacency::kAdjacent});
}

TEST_CASE("engineer separates the instances of a quantity-two chair") {
  std::vector<ObjectProposal> p = {{"desk", "modern", "oak", {1.2, 0.6, 0.75}, 1},
                                   {"chair", "modern", "oak", {0.5, 0.5, 0.9}, 2}};
  std::vector<PlacementStatement> st = {
      {"desk_1", {{Preposition::kOn, "north_wall", Adjacency::kAdjacent}}, "south_wall"},
      {"chair_1", {{Preposition::kLeftOf, "desk_1", Adjacency::kAdjacent}}, "south_wall"},
      {"chair_2", {{Preposition::kRightOf, "desk_1", Adjacency::kAdjacent}}, "south_wall"}};
  ScriptedBackend backend(script_responder({{"", kRoom, 2}, p, st}));
  auto g = run_engineer(p, st, kRoom, backend);
  CHECK(ids_of(g) == std::vector<std::string>{"desk_1", "chair_1", "chair_2"});
  CHECK(g.in_edges("chair_1")[0]->preposition == Preposition::kLeftOf);
  CHECK(g.in_edges("chair_2")[0]->preposition == Preposition::kRightOf);
  CHECK(g.nodes[0].rotation == Rotation::k180);
}

TEST_CASE("engineer drops objects that never validate") {
  auto s = study_script();
  auto good = script_responder(s);
  ScriptedBackend backend([good](const GenerationRequest& req) -> std::string {
    const std::string& first = req.history.empty() ? req.user_message : req.history.front().content;
    if (req.stage == "engineer" && json::parse(first)["object"]["new_object_id"] == "desk_1") {
      return R"({"new_object_id": "desk_1", "name": "desk", "style": "", "material": "",
                 "size_in_meters": {"Length": -1, "Width": 1, "Height": 1}, "scene_graph": [], "facing": "none"})";
    }
    return good(req);
  });
  StageTranscript t;
  auto g = run_engineer(s.proposals, s.statements, s.request.room, backend, {}, 1, &t);
  auto ids = ids_of(g);
  CHECK(std::find(ids.begin(), ids.end(), "desk_1") == ids.end());
  CHECK(ids.size() == 5);
  for (const Edge& e : g.edges) CHECK(e.parent != "desk_1");
  bool noted = false;
  for (const std::string& n : t.notes) noted = noted || n == "SchemaRetryExhausted: dropped desk_1";
  CHECK(noted);
  CHECK(t.retry_count == 3);
}

TEST_CASE("engineer rejects unknown parents and layout-only prepositions") {
  std::vector<ObjectProposal> p = {{"lamp", "modern", "metal", {0.3, 0.3, 0.5}, 1}};
  std::vector<PlacementStatement> st = {{"lamp_1", {{Preposition::kOn, "floor", Adjacency::kAdjacent}}, "none"}};
  const std::string unknown = R"({"new_object_id": "lamp_1", "name": "lamp", "style": "modern", "material": "metal",
    "size_in_meters": {"Length": 0.3, "Width": 0.3, "Height": 0.5},
    "scene_graph": [{"parent": "table_9", "preposition": "on", "adjacency": "adjacent"}], "facing": "none"})";
  const std::string lateral = R"({"new_object_id": "lamp_1", "name": "lamp", "style": "modern", "material": "metal",
    "size_in_meters": {"Length": 0.3, "Width": 0.3, "Height": 0.5},
    "scene_graph": [{"parent": "wall_east", "preposition": "left_of", "adjacency": "adjacent"}], "facing": "none"})";
  const std::string ok = R"({"new_object_id": "lamp_1", "name": "lamp", "style": "modern", "material": "metal",
    "size_in_meters": {"Length": 0.3, "Width": 0.3, "Height": 0.5},
    "scene_graph": [{"parent": "floor", "preposition": "on", "adjacency": "adjacent"}], "facing": "none"})";
  ScriptedBackend backend(replies({unknown, lateral, ok}));
  StageTranscript t;
  auto g = run_engineer(p, st, kRoom, backend, {}, 1, &t);
  CHECK(g.nodes.size() == 1);
  CHECK(t.retry_count == 2);
  CHECK(t.calls[0].errors[0].find("unknown parent") != std::string::npos);
  CHECK(t.calls[1].errors[0].find("not allowed from wall_east") != std::string::npos);
}

TEST_CASE("parallel engineer calls give the same graph and transcript") {
  auto s = study_script();
  ScriptedBackend a(script_responder(s)), b(script_responder(s));
  StageTranscript ta, tb;
  auto ga = run_engineer(s.proposals, s.statements, s.request.room, a, {}, 1, &ta);
  auto gb = run_engineer(s.proposals, s.statements, s.request.room, b, {}, 4, &tb);
  CHECK(ga == gb);
  ta.duration_ms = tb.duration_ms = 0;
  CHECK(transcript_to_json(ta) == transcript_to_json(tb));
}

TEST_CASE("draft entries validate against the engineer schema") {
  for (const DesignScript& s : {study_script(), bedroom_script()}) {
    auto inst = expand_instances(s.proposals);
    for (const PlacementStatement& st : s.statements) {
      const Instance* in = nullptr;
      for (const Instance& i : inst) {
        if (i.id == st.instance) in = &i;
      }
      REQUIRE(in);
      auto entry = draft_entry(s.proposals[in->proposal], st, inst);
      CAPTURE(entry.dump());
      CHECK(engineer_entry_errors(entry).empty());
    }
  }
  auto s = study_script();
  auto inst = expand_instances(s.proposals);
  auto corner = draft_entry(s.proposals[3], s.statements[3], inst);
  REQUIRE(corner["scene_graph"].size() == 2);
  CHECK(corner["scene_graph"][0]["parent"] == "wall_north");
  CHECK(corner["scene_graph"][1]["parent"] == "wall_west");
  CHECK(corner["scene_graph"][1]["preposition"] == "in_the_corner");
}

TEST_CASE("pipeline produces a valid, clean graph") {
  for (const DesignScript& s : {study_script(), bedroom_script()}) {
    ScriptedBackend backend(script_responder(s));
    AgentOptions o;
    PipelineResult r = run_pipeline(s.request, backend);
    CHECK(validate_graph(r.graph).empty());
    CHECK(detect_violations(r.graph).empty());
    REQUIRE(r.transcripts.size() == 5);
    std::vector<std::string> stages;
    for (const auto& t : r.transcripts) stages.push_back(t.stage);
    CHECK(stages == std::vector<std::string>{"designer", "architect", "engineer", "corrector", "refiner"});

    auto inst = expand_instances(s.proposals);
    for (const ObjectNode& n : r.graph.nodes) {
      int hits = 0;
      for (const Instance& i : inst) hits += i.id == n.id;
      CHECK(hits == 1);
    }
    const int bound = 5 * static_cast<int>(inst.size()) * (1 + o.max_retries);
    CHECK(backend.calls() <= bound);
  }
}

TEST_CASE("pipeline is deterministic for a fixed backend") {
  auto s = study_script();
  ScriptedBackend a(script_responder(s)), b(script_responder(s));
  PipelineOptions opts;
  opts.engineer_parallelism = 3;
  auto ra = run_pipeline(s.request, a, opts);
  auto rb = run_pipeline(s.request, b);
  CHECK(graph_to_document(ra.graph).dump() == graph_to_document(rb.graph).dump());
  for (size_t i = 0; i < ra.transcripts.size(); ++i) {
    ra.transcripts[i].duration_ms = rb.transcripts[i].duration_ms = 0;
    CHECK(transcript_to_json(ra.transcripts[i]).dump() == transcript_to_json(rb.transcripts[i]).dump());
  }
}

TEST_CASE("pipeline keeps partial transcripts when a stage fails") {
  auto s = study_script();
  auto good = script_responder(s);
  ScriptedBackend backend([good](const GenerationRequest& req) -> std::string {
    if (req.stage == "engineer") throw Error(ErrorCode::kBackendUnavailable, "engineer offline");
    return good(req);
  });
  PipelineResult partial;
  CHECK(code_of([&] { run_pipeline(s.request, backend, {}, &partial); }) == ErrorCode::kBackendUnavailable);
  REQUIRE(partial.transcripts.size() == 3);
  CHECK(partial.transcripts[0].stage == "designer");
  CHECK(partial.transcripts[1].output.size() == 6);
}

TEST_CASE("pipeline with no proposals yields an empty graph") {
  ScriptedBackend backend(replies({R"({"objects": []})"}));
  auto r = run_pipeline({"empty", kRoom, 0}, backend);
  CHECK(r.graph.nodes.empty());
  CHECK(r.transcripts.size() == 5);
  CHECK(backend.calls() == 1);
}

TEST_CASE("recorded fixtures replay through the canned backend") {
  auto s = study_script();
  auto dir = std::filesystem::temp_directory_path() / "roomgraph_tests" / "canned_study";
  std::filesystem::remove_all(dir);
  ScriptedBackend scripted(script_responder(s));
  RecordingBackend recorder(scripted, dir);
  auto live = run_pipeline(s.request, recorder);
  CannedBackend canned(dir);
  auto replay = run_pipeline(s.request, canned);
  CHECK(graph_to_document(live.graph).dump() == graph_to_document(replay.graph).dump());
}
