#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/geometry.hpp"
#include "roomgraph/scene.hpp"

namespace roomgraph {

struct SceneBoxes {
  Room room;
  std::vector<Box3> boxes;
};

// Room and object bboxes of a manifest document. Throws Error(kParseError).
SceneBoxes scene_boxes_from_manifest(const nlohmann::json& manifest);

struct MetricsReport {
  int n_scenes = 0;     // scenes that parsed
  double nobj = 0.0;    // mean objects per scene
  double oob_rate = 0.0;  // percent of scenes with a box outside the room
  double bbl = 0.0;     // mean summed pairwise intersection volume, m^3
  std::vector<std::pair<std::string, std::string>> excluded;  // (scene, error)
  std::optional<nlohmann::json> rating;
};

nlohmann::json metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

// Summed intersection volume over unordered pairs.
double pairwise_overlap(const std::vector<Box3>& boxes);
// True when some box extends past the room by more than tol on any face.
bool out_of_bounds(const SceneBoxes& scene, double tol = 1e-3);

// Scenes are (name, manifest document). Manifests that fail to parse are
// excluded and reported rather than thrown.
MetricsReport compute_metrics(const std::vector<std::pair<std::string, nlohmann::json>>& scenes, double tol = 1e-3);

inline constexpr std::array<const char*, 4> kRatedCriteria = {
    "functionality_and_activity_based_alignment", "layout_and_furniture", "color_scheme_and_material_choices",
    "overall_aesthetic_and_atmosphere"};
inline constexpr const char* kRealismCriterion = "realism_and_3d_geometric_consistency";

struct Grade {
  std::array<int, 4> grades{};  // kRatedCriteria order
  std::array<std::string, 4> comments;
  std::optional<int> realism;  // stored, not averaged
  std::string realism_comment;
};

// Throws Error(kMalformedGrade).
Grade parse_grade(const std::string& text);

struct RatingReport {
  std::array<double, 4> mean{};
  std::array<double, 4> stddev{};  // population
  double overall = 0.0;            // mean of the four means
  std::vector<Grade> runs;
  int discarded = 0;  // malformed replies that were retried
};

nlohmann::json rating_to_json(const RatingReport& report);
// Means and deviations recomputed from raw grades.
RatingReport aggregate_grades(std::vector<Grade> runs);

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  // images are base64-encoded PNG. Throws Error(kClientUnavailable).
  virtual std::string complete(const std::string& prompt, const std::vector<std::string>& images) = 0;
};

struct RemoteVlmConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
  double temperature = 0.7;
};

// OpenAI-style multimodal chat: images travel as data: URLs.
class RemoteVlmClient : public VlmClient {
 public:
  explicit RemoteVlmClient(RemoteVlmConfig config) : config_(std::move(config)) {}
  std::string complete(const std::string& prompt, const std::vector<std::string>& images) override;
  nlohmann::json request_body(const std::string& prompt, const std::vector<std::string>& images) const;

 private:
  RemoteVlmConfig config_;
};

// The evaluator prompt with the user preference and example JSON filled in.
std::string evaluator_prompt(const std::string& user_prompt);

// Runs the evaluator `runs` times; a malformed reply is retried once, a
// second one throws Error(kMalformedGrade). Throws Error(kImagesRequired)
// without images.
RatingReport rate_scene(const std::vector<std::string>& images, const std::string& user_prompt, VlmClient& client,
                        int runs = 3);

struct VoteTable {
  std::vector<std::string> items;
  std::vector<std::vector<double>> wins;  // wins[i][j]: times i beat j
};

struct BradleyTerryResult {
  std::vector<double> strength;  // sums to 1
  bool converged = false;
  int iterations = 0;

  double win_probability(size_t i, size_t j) const { return strength[i] / (strength[i] + strength[j]); }
};

// Minorization-maximization. Throws Error(kDisconnectedGraph) when the
// comparison graph is not connected, Error(kInvalidArgument) for malformed
// tables.
BradleyTerryResult bradley_terry(const VoteTable& votes, int max_iterations = 100000, double tol = 1e-12);

}  // namespace roomgraph
