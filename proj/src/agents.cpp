#include "roomgraph/agents.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/prompts.hpp"
#include "roomgraph/scene_io.hpp"

namespace roomgraph {

using json = nlohmann::json;

namespace {

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool has_word(const std::vector<std::string>& w, std::string_view s) { return std::find(w.begin(), w.end(), s) != w.end(); }

std::optional<LayoutNode> compass_wall(std::string_view w) {
  if (w == "north" || w == "n") return LayoutNode::kWallNorth;
  if (w == "south" || w == "s") return LayoutNode::kWallSouth;
  if (w == "east" || w == "e") return LayoutNode::kWallEast;
  if (w == "west" || w == "w") return LayoutNode::kWallWest;
  return std::nullopt;
}

// Walls named by compass words; "northwest" and "nw" count as two.
std::vector<LayoutNode> compass_walls(const std::vector<std::string>& w) {
  std::vector<LayoutNode> out;
  auto add = [&](LayoutNode n) {
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  for (const std::string& t : w) {
    if (auto n = compass_wall(t)) {
      add(*n);
      continue;
    }
    for (std::string_view a : {"north", "south", "n", "s"}) {
      for (std::string_view b : {"east", "west", "e", "w"}) {
        if (a.size() + b.size() == t.size() && t.starts_with(a) && t.ends_with(b) && (a.size() > 1) == (b.size() > 1)) {
          add(*compass_wall(a));
          add(*compass_wall(b));
        }
      }
    }
  }
  return out;
}

std::string fmt_m(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string room_phrase(const Room& room) {
  return fmt_m(room.width_x) + "m (east-west) x " + fmt_m(room.depth_y) + "m (north-south) x " +
         fmt_m(room.height_z) + "m (height)";
}

std::string resolve_system_prompt(const AgentOptions& options, std::string_view stage) {
  return options.system_prompt.empty() ? default_system_prompt(stage) : options.system_prompt;
}

json size_json(const Vec3& s) { return {{"Length", s.x}, {"Width", s.y}, {"Height", s.z}}; }

void absorb(StageTranscript* t, StructuredResult& r) {
  if (!t) return;
  for (CallRecord& c : r.calls) t->calls.push_back(std::move(c));
  t->retry_count = std::max(t->retry_count, r.retries);
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> instance_ids(const std::vector<Instance>& instances) {
  std::vector<std::string> out;
  for (const Instance& i : instances) out.push_back(i.id);
  return out;
}

}  // namespace

json proposals_to_json(const std::vector<ObjectProposal>& proposals) {
  json objects = json::array();
  for (const ObjectProposal& p : proposals) {
    objects.push_back({{"name", p.name},
                       {"architecture_style", p.style},
                       {"material", p.material},
                       {"bounding_box_size", size_json(p.size)},
                       {"quantity", p.quantity}});
  }
  return {{"objects", std::move(objects)}};
}

std::vector<ObjectProposal> proposals_from_json(const json& j) {
  const auto errors = shipped_schema("designer").validate(j);
  if (!errors.empty()) throw Error(ErrorCode::kParseError, errors.front());
  std::vector<ObjectProposal> out;
  for (const json& o : j["objects"]) {
    const json& s = o["bounding_box_size"];
    out.push_back({o["name"].get<std::string>(), o["architecture_style"].get<std::string>(),
                   o["material"].get<std::string>(),
                   Vec3{s["Length"].get<double>(), s["Width"].get<double>(), s["Height"].get<double>()},
                   o["quantity"].get<int>()});
  }
  return out;
}

std::vector<Instance> expand_instances(const std::vector<ObjectProposal>& proposals) {
  std::vector<Instance> out;
  std::map<std::string, int> used;
  for (size_t i = 0; i < proposals.size(); ++i) {
    const std::string stem = id_stem(proposals[i].name);
    for (int q = 0; q < proposals[i].quantity; ++q) out.push_back({stem + "_" + std::to_string(++used[stem]), i});
  }
  return out;
}

json statements_to_json(const std::vector<PlacementStatement>& statements) {
  json out = json::array();
  for (const PlacementStatement& s : statements) {
    json placement = json::array();
    for (const PlacementSpec& p : s.placement) {
      placement.push_back({{"preposition", std::string(to_string(p.preposition))},
                           {"anchor", p.anchor},
                           {"proximity", std::string(to_string(p.proximity))}});
    }
    out.push_back({{"instance", s.instance}, {"placement", std::move(placement)}, {"facing", s.facing}});
  }
  return out;
}

std::vector<PlacementStatement> statements_from_json(const json& j) {
  std::vector<PlacementStatement> out;
  try {
    for (const json& s : j) {
      PlacementStatement st{s.at("instance").get<std::string>(), {}, s.at("facing").get<std::string>()};
      for (const json& p : s.at("placement")) {
        auto prep = parse_preposition(p.at("preposition").get<std::string>());
        auto prox = parse_adjacency(p.at("proximity").get<std::string>());
        if (!prep || !prox) throw Error(ErrorCode::kParseError, "bad placement in statement for " + st.instance);
        st.placement.push_back({*prep, p.at("anchor").get<std::string>(), *prox});
      }
      out.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return out;
}

std::vector<std::string> resolve_anchor(const std::string& anchor, const std::vector<Instance>& instances) {
  for (const Instance& i : instances) {
    if (i.id == anchor) return {i.id};
  }
  if (is_layout_id(anchor)) return {anchor};

  const std::vector<std::string> w = words(anchor);
  std::string joined;
  for (const std::string& t : w) joined += (joined.empty() ? "" : "_") + t;
  for (const Instance& i : instances) {
    if (i.id == joined || joined.ends_with("_" + i.id)) return {i.id};
  }

  if (has_word(w, "corner")) {
    const auto walls = compass_walls(w);
    std::vector<std::string> out;
    for (LayoutNode n : walls) out.emplace_back(layout_node_id(n));
    if (walls.size() == 2 && (is_wall(walls[0]) && is_wall(walls[1])) &&
        (walls[0] == LayoutNode::kWallNorth || walls[0] == LayoutNode::kWallSouth) !=
            (walls[1] == LayoutNode::kWallNorth || walls[1] == LayoutNode::kWallSouth)) {
      std::sort(out.begin(), out.end());
      return out;
    }
    return {};
  }
  if (has_word(w, "middle") || has_word(w, "center") || has_word(w, "centre")) {
    return {std::string(layout_node_id(LayoutNode::kMiddleOfRoom))};
  }
  if (has_word(w, "ceiling")) return {std::string(layout_node_id(LayoutNode::kCeiling))};
  if (has_word(w, "floor")) return {std::string(layout_node_id(LayoutNode::kFloor))};
  if (has_word(w, "wall") || (w.size() == 1 && compass_wall(w[0]))) {
    const auto walls = compass_walls(w);
    if (walls.size() == 1) return {std::string(layout_node_id(walls[0]))};
    return {};
  }

  // A bare object name refers to its only instance.
  std::vector<std::string> hits;
  for (const Instance& i : instances) {
    if (i.id.substr(0, i.id.rfind('_')) == joined) hits.push_back(i.id);
  }
  if (hits.size() == 1) return hits;
  return {};
}

std::optional<std::string> normalize_facing(const std::string& text) {
  std::vector<std::string> w = words(text);
  std::erase_if(w, [](const std::string& t) { return t == "facing" || t == "the" || t == "towards" || t == "toward"; });
  if (w.empty() || (w.size() == 1 && (w[0] == "none" || w[0] == "na"))) return "none";
  const bool wall_ok = w.size() == 1 || (w.size() == 2 && (w[0] == "wall" || w[1] == "wall"));
  if (!wall_ok) return std::nullopt;
  const std::string& compass = w[0] == "wall" ? w.back() : w[0];
  auto n = compass_wall(compass);
  if (!n || compass.size() == 1) return std::nullopt;
  return std::string(compass) + "_wall";
}

bool is_opening_related(const std::string& name) {
  for (const std::string& t : words(name)) {
    for (std::string_view bad : {"door", "window", "curtain", "drape", "blind", "shutter"}) {
      if (t.starts_with(bad)) return true;
    }
  }
  return false;
}

json draft_entry(const ObjectProposal& proposal, const PlacementStatement& statement,
                 const std::vector<Instance>& instances) {
  json graph = json::array();
  for (const PlacementSpec& p : statement.placement) {
    const auto targets = resolve_anchor(p.anchor, instances);
    Preposition prep = p.preposition;
    if (targets.size() == 2) prep = Preposition::kInTheCorner;
    for (const std::string& parent : targets) {
      Preposition use = prep;
      if (is_layout_id(parent) && !allowed_from_layout(use)) use = Preposition::kOn;
      if (!is_layout_id(parent) && !allowed_between_objects(use)) use = Preposition::kOn;
      graph.push_back({{"parent", parent},
                       {"preposition", std::string(to_string(use))},
                       {"adjacency", std::string(to_string(p.proximity))}});
    }
  }
  return {{"new_object_id", statement.instance},
          {"name", proposal.name},
          {"style", proposal.style},
          {"material", proposal.material},
          {"size_in_meters", size_json(proposal.size)},
          {"scene_graph", std::move(graph)},
          {"facing", normalize_facing(statement.facing).value_or("none")}};
}

std::vector<ObjectProposal> run_designer(const DesignRequest& request, GenerationBackend& backend,
                                         const AgentOptions& options, StageTranscript* transcript) {
  if (request.object_count < 0) throw Error(ErrorCode::kInvalidArgument, "object_count must be >= 0");
  if (!request.room.valid()) throw Error(ErrorCode::kInvalidArgument, "room dimensions must be positive");
  const auto start = std::chrono::steady_clock::now();

  StructuredCall call;
  call.stage = "designer";
  call.label = "proposals";
  call.system_prompt =
      fill_template(resolve_system_prompt(options, "designer"), {{"n", std::to_string(request.object_count)}});
  call.user_message = "User preference: " + request.user_text + "\nRoom size: " + room_phrase(request.room) +
                      "\nNumber of objects: " + std::to_string(request.object_count);
  call.decoding = options.decoding;
  call.max_retries = options.max_retries;
  call.check = [](const json& reply) {
    auto errors = shipped_schema("designer").validate(reply);
    if (!errors.empty()) return errors;
    for (size_t i = 0; i < reply["objects"].size(); ++i) {
      const std::string name = reply["objects"][i]["name"].get<std::string>();
      if (is_opening_related(name)) {
        errors.push_back("/objects/" + std::to_string(i) + "/name: '" + name +
                         "' is related to doors or windows; suggest a different object");
      }
    }
    return errors;
  };
  StructuredResult r = call_structured(backend, call);
  if (transcript) {
    transcript->stage = "designer";
    transcript->system_prompt = call.system_prompt;
  }
  absorb(transcript, r);
  if (!r.value) {
    if (transcript) transcript->duration_ms = ms_since(start);
    throw Error(ErrorCode::kSchemaRetryExhausted, "designer output never validated");
  }
  auto proposals = proposals_from_json(*r.value);
  if (transcript) {
    transcript->output = proposals_to_json(proposals);
    int total = 0;
    for (const ObjectProposal& p : proposals) total += p.quantity;
    transcript->notes.push_back(std::to_string(proposals.size()) + " proposals, " + std::to_string(total) +
                                " instances");
    transcript->duration_ms = ms_since(start);
  }
  return proposals;
}

std::vector<PlacementStatement> run_architect(const std::vector<ObjectProposal>& proposals, const DesignRequest& request,
                                              GenerationBackend& backend, const AgentOptions& options,
                                              StageTranscript* transcript) {
  if (proposals.empty()) throw Error(ErrorCode::kInvalidArgument, "architect needs at least one proposal");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Instance> instances = expand_instances(proposals);

  json objects = json::array();
  for (size_t i = 0; i < proposals.size(); ++i) {
    json ids = json::array();
    for (const Instance& in : instances) {
      if (in.proposal == i) ids.push_back(in.id);
    }
    objects.push_back({{"object_name", proposals[i].name},
                       {"quantity", proposals[i].quantity},
                       {"instance_ids", std::move(ids)},
                       {"bounding_box_size", size_json(proposals[i].size)}});
  }
  const json message = {{"user_preference", request.user_text},
                        {"room", room_to_json(request.room)},
                        {"objects", std::move(objects)}};

  std::vector<PlacementStatement> statements;
  StructuredCall call;
  call.stage = "architect";
  call.label = "placements";
  call.system_prompt = resolve_system_prompt(options, "architect");
  call.user_message = message.dump(2);
  call.decoding = options.decoding;
  call.max_retries = options.max_retries;
  call.check = [&](const json& reply) {
    statements.clear();
    auto errors = shipped_schema("architect").validate(reply);
    if (!errors.empty()) return errors;
    std::map<size_t, const json*> by_proposal;
    for (const json& o : reply["objects"]) {
      const std::string name = o["object_name"].get<std::string>();
      const std::string stem = id_stem(name);
      bool matched = false;
      for (size_t i = 0; i < proposals.size(); ++i) {
        if (id_stem(proposals[i].name) == stem && !by_proposal.count(i)) {
          by_proposal[i] = &o;
          matched = true;
          break;
        }
      }
      if (!matched) errors.push_back("object '" + name + "' was not proposed or is listed twice");
    }
    for (size_t i = 0; i < proposals.size(); ++i) {
      auto it = by_proposal.find(i);
      if (it == by_proposal.end()) {
        errors.push_back("missing placements for '" + proposals[i].name + "'");
        continue;
      }
      const json& inst = (*it->second)["instances"];
      if (static_cast<int>(inst.size()) != proposals[i].quantity) {
        errors.push_back("'" + proposals[i].name + "' needs " + std::to_string(proposals[i].quantity) +
                         " instances, got " + std::to_string(inst.size()));
      }
    }
    if (!errors.empty()) return errors;

    for (const Instance& in : instances) {
      size_t k = 0;
      for (const Instance& other : instances) {
        if (other.id == in.id) break;
        if (other.proposal == in.proposal) ++k;
      }
      const json& st = (*by_proposal[in.proposal])["instances"][k];
      PlacementStatement s{in.id, {}, st["facing"].get<std::string>()};
      if (!normalize_facing(s.facing)) errors.push_back(in.id + ": unrecognized facing '" + s.facing + "'");
      for (const json& p : st["placement"]) {
        PlacementSpec spec{*parse_preposition(p["preposition"].get<std::string>()), p["anchor"].get<std::string>(),
                           *parse_adjacency(p["proximity"].get<std::string>())};
        const auto targets = resolve_anchor(spec.anchor, instances);
        if (targets.empty()) {
          errors.push_back(in.id + ": unknown anchor '" + spec.anchor + "'");
        } else if (std::find(targets.begin(), targets.end(), in.id) != targets.end()) {
          errors.push_back(in.id + ": cannot be placed relative to itself");
        }
        s.placement.push_back(std::move(spec));
      }
      statements.push_back(std::move(s));
    }
    if (!errors.empty()) statements.clear();
    return errors;
  };
  StructuredResult r = call_structured(backend, call);
  if (transcript) {
    transcript->stage = "architect";
    transcript->system_prompt = call.system_prompt;
  }
  absorb(transcript, r);
  if (transcript) transcript->duration_ms = ms_since(start);
  if (!r.value) throw Error(ErrorCode::kSchemaRetryExhausted, "architect output never validated");
  if (transcript) transcript->output = statements_to_json(statements);
  return statements;
}

SceneGraph run_engineer(const std::vector<ObjectProposal>& proposals, const std::vector<PlacementStatement>& statements,
                        const Room& room, GenerationBackend& backend, const AgentOptions& options, int parallelism,
                        StageTranscript* transcript) {
  if (parallelism < 1) throw Error(ErrorCode::kInvalidArgument, "parallelism must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Instance> instances = expand_instances(proposals);
  std::map<std::string, const Instance*> by_id;
  for (const Instance& i : instances) by_id[i.id] = &i;
  for (const PlacementStatement& s : statements) {
    if (!by_id.count(s.instance)) throw Error(ErrorCode::kInvalidArgument, "statement for unknown instance " + s.instance);
  }
  const std::string system_prompt = resolve_system_prompt(options, "engineer");
  const json ids = instance_ids(instances);

  const size_t n = statements.size();
  std::vector<StructuredResult> results(n);
  std::vector<std::optional<ParsedEntry>> parsed(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<size_t> next{0};

  auto work = [&] {
    for (size_t k = next++; k < n; k = next++) {
      const PlacementStatement& s = statements[k];
      const ObjectProposal& p = proposals[by_id[s.instance]->proposal];
      const json message = {{"object",
                             {{"new_object_id", s.instance},
                              {"name", p.name},
                              {"style", p.style},
                              {"material", p.material},
                              {"size_in_meters", size_json(p.size)}}},
                            {"placement", statements_to_json({s})[0]},
                            {"objects_in_room", ids},
                            {"room", room_to_json(room)}};
      StructuredCall call;
      call.stage = "engineer";
      call.label = s.instance;
      call.system_prompt = system_prompt;
      call.user_message = message.dump(2);
      call.decoding = options.decoding;
      call.max_retries = options.max_retries;
      call.check = [&, k](const json& reply) {
        parsed[k].reset();
        auto errors = engineer_entry_errors(reply);
        if (!errors.empty()) return errors;
        if (reply["new_object_id"] != s.instance) {
          errors.push_back("/new_object_id: expected " + s.instance);
          return errors;
        }
        ParsedEntry e;
        try {
          e = entry_from_json(reply);
        } catch (const Error& err) {
          errors.push_back(err.what());
          return errors;
        }
        if (e.edges.empty()) errors.push_back("/scene_graph: at least one placement is required");
        for (const Edge& edge : e.edges) {
          const bool layout = is_layout_id(edge.parent);
          if (edge.parent == s.instance) {
            errors.push_back("/scene_graph: " + s.instance + " cannot be its own parent");
          } else if (!layout && !by_id.count(edge.parent)) {
            errors.push_back("/scene_graph: unknown parent '" + edge.parent + "'");
          } else if (layout && !allowed_from_layout(edge.preposition)) {
            errors.push_back("/scene_graph: '" + std::string(to_string(edge.preposition)) +
                             "' is not allowed from " + edge.parent);
          } else if (!layout && !allowed_between_objects(edge.preposition)) {
            errors.push_back("/scene_graph: '" + std::string(to_string(edge.preposition)) +
                             "' is not allowed between objects");
          }
        }
        if (errors.empty()) parsed[k] = std::move(e);
        return errors;
      };
      try {
        results[k] = call_structured(backend, call);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };
  const int workers = static_cast<int>(std::min<size_t>(n, static_cast<size_t>(parallelism)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  SceneGraph graph;
  graph.room = room;
  std::set<std::string> dropped;
  if (transcript) {
    transcript->stage = "engineer";
    transcript->system_prompt = system_prompt;
  }
  for (size_t k = 0; k < n; ++k) {
    absorb(transcript, results[k]);
    if (!results[k].value || !parsed[k]) {
      dropped.insert(statements[k].instance);
      if (transcript) {
        transcript->notes.push_back(std::string(error_code_name(ErrorCode::kSchemaRetryExhausted)) + ": dropped " +
                                    statements[k].instance);
      }
      continue;
    }
    graph.nodes.push_back(parsed[k]->node);
    for (Edge& e : parsed[k]->edges) graph.edges.push_back(e);
  }
  for (const Instance& i : instances) {
    const bool stated = std::any_of(statements.begin(), statements.end(),
                                    [&](const PlacementStatement& s) { return s.instance == i.id; });
    if (!stated) dropped.insert(i.id);
  }
  std::erase_if(graph.edges, [&](const Edge& e) { return dropped.count(e.parent) > 0; });
  if (transcript) {
    transcript->output = graph_to_document(graph);
    transcript->duration_ms = ms_since(start);
  }
  return graph;
}

PipelineResult run_pipeline(const DesignRequest& request, GenerationBackend& backend, const PipelineOptions& options,
                            PipelineResult* partial) {
  PipelineResult out;
  out.graph.room = request.room;
  auto stage = [&](const std::string& name) -> StageTranscript& {
    out.transcripts.push_back({});
    out.transcripts.back().stage = name;
    return out.transcripts.back();
  };
  try {
    const auto proposals = run_designer(request, backend, options.designer, &stage("designer"));
    std::vector<PlacementStatement> statements;
    if (!proposals.empty()) {
      statements = run_architect(proposals, request, backend, options.architect, &stage("architect"));
      out.graph = run_engineer(proposals, statements, request.room, backend, options.engineer,
                               options.engineer_parallelism, &stage("engineer"));
    } else {
      stage("architect").notes.push_back("no proposals");
      stage("engineer").output = graph_to_document(out.graph);
    }
    out.violations = detect_violations(out.graph);

    out.transcripts.reserve(out.transcripts.size() + 2);
    StageTranscript& corr = stage("corrector");
    StageTranscript& ref = stage("refiner");
    const auto start = std::chrono::steady_clock::now();
    out.graph = correct_graph(out.graph, &backend, options.corrector, options.refiner, &corr, &ref);
    corr.duration_ms = ms_since(start);
    ref.output = graph_to_document(out.graph);
    corr.system_prompt = resolve_system_prompt(options.corrector, "corrector");
    ref.system_prompt = resolve_system_prompt(options.refiner, "refiner");
  } catch (...) {
    if (partial) *partial = out;
    throw;
  }
  return out;
}

}  // namespace roomgraph
