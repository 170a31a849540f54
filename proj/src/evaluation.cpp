#include "roomgraph/evaluation.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "roomgraph/assets.hpp"
#include "roomgraph/backend.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/http.hpp"
#include "roomgraph/prompts.hpp"

namespace roomgraph {

using json = nlohmann::json;

namespace {

Vec3 vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

}  // namespace

SceneBoxes scene_boxes_from_manifest(const json& manifest) {
  const auto errors = shipped_schema("manifest").validate(manifest);
  if (!errors.empty()) throw Error(ErrorCode::kParseError, join(errors));
  SceneBoxes out;
  const json& r = manifest["room"];
  out.room = {r["width"].get<double>(), r["depth"].get<double>(), r["height"].get<double>()};
  for (const json& o : manifest["objects"]) {
    const Box3 b{vec3(o["bbox"]["min"]), vec3(o["bbox"]["max"])};
    for (int a = 0; a < 3; ++a) {
      if (!(b.min[a] <= b.max[a])) throw Error(ErrorCode::kParseError, o["id"].get<std::string>() + ": inverted bbox");
    }
    out.boxes.push_back(b);
  }
  return out;
}

double pairwise_overlap(const std::vector<Box3>& boxes) {
  double total = 0.0;
  for (size_t i = 0; i < boxes.size(); ++i) {
    for (size_t j = i + 1; j < boxes.size(); ++j) total += intersection_volume(boxes[i], boxes[j]);
  }
  return total;
}

bool out_of_bounds(const SceneBoxes& scene, double tol) {
  const Box3 room = scene.room.box();
  for (const Box3& b : scene.boxes) {
    for (int a = 0; a < 3; ++a) {
      if (b.min[a] < room.min[a] - tol || b.max[a] > room.max[a] + tol) return true;
    }
  }
  return false;
}

MetricsReport compute_metrics(const std::vector<std::pair<std::string, json>>& scenes, double tol) {
  MetricsReport r;
  double objects = 0.0, oob = 0.0, overlap = 0.0;
  for (const auto& [name, manifest] : scenes) {
    SceneBoxes s;
    try {
      s = scene_boxes_from_manifest(manifest);
    } catch (const Error& e) {
      r.excluded.emplace_back(name, e.what());
      continue;
    }
    ++r.n_scenes;
    objects += static_cast<double>(s.boxes.size());
    oob += out_of_bounds(s, tol) ? 1.0 : 0.0;
    overlap += pairwise_overlap(s.boxes);
  }
  if (r.n_scenes > 0) {
    r.nobj = objects / r.n_scenes;
    r.oob_rate = 100.0 * oob / r.n_scenes;
    r.bbl = overlap / r.n_scenes;
  }
  return r;
}

json metrics_to_json(const MetricsReport& report) {
  json excluded = json::array();
  for (const auto& [scene, error] : report.excluded) excluded.push_back({{"scene", scene}, {"error", error}});
  json j = {{"n_scenes", report.n_scenes},
            {"nobj", report.nobj},
            {"oob_rate", report.oob_rate},
            {"bbl", report.bbl},
            {"excluded", std::move(excluded)}};
  if (report.rating) j["rating"] = *report.rating;
  return j;
}

MetricsReport metrics_from_json(const json& j) {
  const auto errors = shipped_schema("metrics").validate(j);
  if (!errors.empty()) throw Error(ErrorCode::kParseError, join(errors));
  MetricsReport r;
  r.n_scenes = j["n_scenes"].get<int>();
  r.nobj = j["nobj"].get<double>();
  r.oob_rate = j["oob_rate"].get<double>();
  r.bbl = j["bbl"].get<double>();
  for (const json& e : j["excluded"]) r.excluded.emplace_back(e["scene"].get<std::string>(), e["error"].get<std::string>());
  if (j.contains("rating")) r.rating = j["rating"];
  return r;
}

Grade parse_grade(const std::string& text) {
  json doc;
  try {
    doc = extract_json(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedGrade, e.what());
  }
  const auto errors = shipped_schema("grade").validate(doc);
  if (!errors.empty()) throw Error(ErrorCode::kMalformedGrade, join(errors));
  Grade g;
  for (size_t i = 0; i < kRatedCriteria.size(); ++i) {
    g.grades[i] = doc[kRatedCriteria[i]]["grade"].get<int>();
    g.comments[i] = doc[kRatedCriteria[i]]["comment"].get<std::string>();
  }
  if (doc.contains(kRealismCriterion)) {
    g.realism = doc[kRealismCriterion]["grade"].get<int>();
    g.realism_comment = doc[kRealismCriterion]["comment"].get<std::string>();
  }
  return g;
}

RatingReport aggregate_grades(std::vector<Grade> runs) {
  RatingReport r;
  r.runs = std::move(runs);
  if (r.runs.empty()) return r;
  const double n = static_cast<double>(r.runs.size());
  for (size_t c = 0; c < kRatedCriteria.size(); ++c) {
    double sum = 0.0;
    for (const Grade& g : r.runs) sum += g.grades[c];
    r.mean[c] = sum / n;
    double ss = 0.0;
    for (const Grade& g : r.runs) ss += (g.grades[c] - r.mean[c]) * (g.grades[c] - r.mean[c]);
    r.stddev[c] = std::sqrt(ss / n);
  }
  r.overall = std::accumulate(r.mean.begin(), r.mean.end(), 0.0) / static_cast<double>(r.mean.size());
  return r;
}

json rating_to_json(const RatingReport& report) {
  json criteria = json::object();
  for (size_t c = 0; c < kRatedCriteria.size(); ++c) {
    criteria[kRatedCriteria[c]] = {{"mean", report.mean[c]}, {"std", report.stddev[c]}};
  }
  json runs = json::array();
  for (const Grade& g : report.runs) {
    json run = json::object();
    for (size_t c = 0; c < kRatedCriteria.size(); ++c) {
      run[kRatedCriteria[c]] = {{"grade", g.grades[c]}, {"comment", g.comments[c]}};
    }
    if (g.realism) run[kRealismCriterion] = {{"grade", *g.realism}, {"comment", g.realism_comment}};
    runs.push_back(std::move(run));
  }
  return {{"criteria", std::move(criteria)},
          {"overall", report.overall},
          {"runs", std::move(runs)},
          {"discarded", report.discarded}};
}

json RemoteVlmClient::request_body(const std::string& prompt, const std::vector<std::string>& images) const {
  json content = json::array({{{"type", "text"}, {"text", prompt}}});
  for (const std::string& img : images) {
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + img}}}});
  }
  return {{"model", config_.model},
          {"temperature", config_.temperature},
          {"response_format", {{"type", "json_object"}}},
          {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})}};
}

std::string RemoteVlmClient::complete(const std::string& prompt, const std::vector<std::string>& images) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) throw Error(ErrorCode::kClientUnavailable, config_.api_key_env + " is not set");
  std::string url = config_.base_url;
  if (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";
  HttpResult res;
  try {
    res = http_post_json(url, request_body(prompt, images).dump(), {{"Authorization", std::string("Bearer ") + key}},
                         config_.timeout_seconds);
  } catch (const Error& e) {
    throw Error(ErrorCode::kClientUnavailable, e.what());
  }
  if (res.status != 200) throw Error(ErrorCode::kClientUnavailable, url + " returned HTTP " + std::to_string(res.status));
  try {
    return RemoteChatBackend::parse_response(res.body);
  } catch (const Error& e) {
    throw Error(ErrorCode::kClientUnavailable, e.what());
  }
}

std::string evaluator_prompt(const std::string& user_prompt) {
  json example = json::object();
  example[kRealismCriterion] = {{"comment", "Your comment and suggestion."}, {"grade", 0}};
  for (const char* c : kRatedCriteria) example[c] = {{"comment", "Your comment and suggestion."}, {"grade", 0}};
  return fill_template(std::string(embedded_asset("prompts/evaluator.txt")),
                       {{"prompt", user_prompt}, {"example_json", example.dump(4)}});
}

RatingReport rate_scene(const std::vector<std::string>& images, const std::string& user_prompt, VlmClient& client,
                        int runs) {
  if (images.empty()) {
    throw Error(ErrorCode::kImagesRequired,
                "rating needs rendered views; bundles carry only view definitions, render the manifest first");
  }
  if (runs < 1) throw Error(ErrorCode::kInvalidArgument, "runs must be >= 1");
  const std::string prompt = evaluator_prompt(user_prompt);
  std::vector<Grade> grades;
  int discarded = 0;
  for (int r = 0; r < runs; ++r) {
    try {
      grades.push_back(parse_grade(client.complete(prompt, images)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMalformedGrade) throw;
      ++discarded;
      grades.push_back(parse_grade(client.complete(prompt, images)));
    }
  }
  RatingReport report = aggregate_grades(std::move(grades));
  report.discarded = discarded;
  return report;
}

BradleyTerryResult bradley_terry(const VoteTable& votes, int max_iterations, double tol) {
  const size_t n = votes.items.size();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two items");
  if (votes.wins.size() != n) throw Error(ErrorCode::kInvalidArgument, "wins must be n x n");
  for (size_t i = 0; i < n; ++i) {
    if (votes.wins[i].size() != n) throw Error(ErrorCode::kInvalidArgument, "wins must be n x n");
    if (votes.wins[i][i] != 0) throw Error(ErrorCode::kInvalidArgument, "wins[i][i] must be 0");
    for (double w : votes.wins[i]) {
      if (!(w >= 0) || !std::isfinite(w)) throw Error(ErrorCode::kInvalidArgument, "vote counts must be non-negative");
    }
  }

  std::vector<char> seen(n, 0);
  std::vector<size_t> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    const size_t i = stack.back();
    stack.pop_back();
    for (size_t j = 0; j < n; ++j) {
      if (!seen[j] && votes.wins[i][j] + votes.wins[j][i] > 0) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw Error(ErrorCode::kDisconnectedGraph, votes.items[i] + " is not compared with the others");
  }

  BradleyTerryResult r;
  r.strength.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> wins(n, 0.0);
  for (size_t i = 0; i < n; ++i) wins[i] = std::accumulate(votes.wins[i].begin(), votes.wins[i].end(), 0.0);
  std::vector<double> next(n);
  for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
    for (size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double games = votes.wins[i][j] + votes.wins[j][i];
        if (games > 0) denom += games / (r.strength[i] + r.strength[j]);
      }
      next[i] = wins[i] / denom;
    }
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    double change = 0.0;
    for (size_t i = 0; i < n; ++i) {
      next[i] /= total;
      change = std::max(change, std::abs(next[i] - r.strength[i]));
    }
    r.strength.swap(next);
    if (change < tol) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, max_iterations);
  return r;
}

}  // namespace roomgraph
