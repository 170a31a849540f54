#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "roomgraph/corrector.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/graph.hpp"
#include "roomgraph/scene_io.hpp"
#include "roomgraph/service.hpp"

namespace py = pybind11;
using namespace roomgraph;
using json = nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

SolverConfig solver_config(const std::string& overrides) {
  DesignConfig c;
  if (!overrides.empty()) c = design_config_from_json({{"solver", parse(overrides)}});
  return c.solver;
}

std::vector<std::string> graph_problems(const std::string& doc) {
  std::vector<std::string> out;
  for (const GraphError& e : validate_graph(graph_from_document(parse(doc)))) out.push_back(e.message);
  return out;
}

std::string solve(const std::string& doc, const std::string& solver) {
  return layout_to_json(solve_layout(graph_from_document(parse(doc)), solver_config(solver))).dump();
}

std::vector<std::string> verify(const std::string& doc, const std::string& layout, const std::string& solver) {
  return verify_layout(graph_from_document(parse(doc)), layout_from_json(parse(layout)), solver_config(solver));
}

std::string floor_plan(const std::string& doc, const std::string& layout) {
  return render_floor_plan(layout_from_json(parse(layout)), graph_from_document(parse(doc)));
}

std::string violations(const std::string& doc) {
  return violations_to_json(detect_violations(graph_from_document(parse(doc)))).dump();
}

std::string correct(const std::string& doc) {
  return graph_to_document(correct_graph(graph_from_document(parse(doc)))).dump();
}

std::string metrics(const std::vector<std::pair<std::string, std::string>>& scenes) {
  std::vector<std::pair<std::string, json>> parsed;
  for (const auto& [name, text] : scenes) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception&) {
      doc = json{{"unparseable", text.substr(0, 64)}};
    }
    parsed.emplace_back(name, std::move(doc));
  }
  return metrics_to_json(compute_metrics(parsed)).dump();
}

py::dict bt(const std::vector<std::string>& items, const std::vector<std::vector<double>>& wins) {
  const BradleyTerryResult r = bradley_terry({items, wins});
  py::dict out;
  out["strength"] = r.strength;
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  return out;
}

std::vector<std::pair<std::string, double>> search(const std::string& index_path, const std::vector<double>& query,
                                                   int k) {
  std::vector<std::pair<std::string, double>> out;
  for (const Match& m : retrieve(read_index(index_path), query, k)) out.emplace_back(m.id, m.similarity);
  return out;
}

py::tuple design(const std::string& config_path, const std::string& design_id, const std::string& prompt,
                 const std::vector<double>& room, int n, const std::string& output_root) {
  if (room.size() != 3) throw Error(ErrorCode::kInvalidArgument, "room needs width, depth and height");
  RunConfig config = load_run_config(config_path);
  if (!output_root.empty()) config.output_root = output_root;
  const Runtime runtime = open_runtime(config);
  DesignOutcome out;
  {
    py::gil_scoped_release release;
    out = cmd_design(design_id, {prompt, {room[0], room[1], room[2]}, n}, config, runtime);
  }
  return py::make_tuple(out.dir.string(), out.bundle.status, out.exit_code);
}

std::string replay(const std::string& bundle, const std::string& stage, const std::string& overrides,
                   const std::string& config_path) {
  Runtime runtime;
  if (!config_path.empty()) runtime = open_runtime(load_run_config(config_path));
  py::gil_scoped_release release;
  return replay_stage(bundle, stage, parse(overrides.empty() ? "{}" : overrides), runtime.context()).string();
}

std::string evaluate(const std::string& config_path, const std::vector<std::string>& inputs) {
  const RunConfig config = load_run_config(config_path);
  std::unique_ptr<VlmClient> client;
  if (config.evaluator) client = std::make_unique<RemoteVlmClient>(config.vlm);
  const std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
  py::gil_scoped_release release;
  return metrics_to_json(cmd_evaluate(paths, client.get(), config.evaluator_runs)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "roomgraph C++ core";
  py::register_exception<Error>(m, "RoomgraphError");

  m.def("validate_graph", &graph_problems, py::arg("document"));
  m.def("detect_violations", &violations, py::arg("document"));
  m.def("correct_graph", &correct, py::arg("document"));
  m.def("solve_layout", &solve, py::arg("document"), py::arg("solver") = "");
  m.def("verify_layout", &verify, py::arg("document"), py::arg("layout"), py::arg("solver") = "");
  m.def("render_floor_plan", &floor_plan, py::arg("document"), py::arg("layout"));
  m.def("compute_metrics", &metrics, py::arg("scenes"));
  m.def("bradley_terry", &bt, py::arg("items"), py::arg("wins"));
  m.def("search", &search, py::arg("index_path"), py::arg("query"), py::arg("k"));
  m.def("design", &design, py::arg("config"), py::arg("design_id"), py::arg("prompt"), py::arg("room"),
        py::arg("n"), py::arg("output_root") = "");
  m.def("replay", &replay, py::arg("bundle"), py::arg("stage"), py::arg("overrides") = "",
        py::arg("config") = "");
  m.def("evaluate", &evaluate, py::arg("config"), py::arg("inputs"));
  m.def("bundle_checksums", [](const std::string& dir) { return bundle_checksums(dir); }, py::arg("bundle"));
}
