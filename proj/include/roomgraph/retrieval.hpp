#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "roomgraph/geometry.hpp"
#include "roomgraph/scene.hpp"

namespace roomgraph {

struct AssetRecord {
  std::string id;
  std::vector<float> embedding;
  Vec3 native_size;  // meters, local frame like ObjectNode::size
  std::string uri;
  std::string name;
};

struct AssetIndex {
  int dimension = 0;
  std::vector<AssetRecord> records;  // sorted by id, unit-norm embeddings
  std::string checksum;              // SHA-256 of the binary record block

  size_t size() const { return records.size(); }
  const AssetRecord* find(const std::string& id) const;
};

// Normalizes embeddings and sorts by id. Throws Error(kDimensionMismatch),
// Error(kDuplicateId), Error(kInvalidArgument) for an empty list, a zero
// vector, a non-positive size or an id longer than 63 bytes.
AssetIndex build_index(std::vector<AssetRecord> records);

// Writes `path` (binary records) and `path` + ".tsv" (names and URIs).
// Throws Error(kIoError).
void write_index(const AssetIndex& index, const std::filesystem::path& path);
// Throws Error(kIoError), Error(kParseError).
AssetIndex read_index(const std::filesystem::path& path);

struct Match {
  std::string id;
  double similarity = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

// Exact top-k by cosine similarity, descending; ties by ascending id.
// Throws Error(kDimensionMismatch), Error(kInvalidArgument) for k < 1 or a
// zero query.
std::vector<Match> retrieve(const AssetIndex& index, const std::vector<double>& query, int k);

// "{style_material} {name}"
std::string describe_object(const ObjectNode& node);

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Throws Error(kEmbedderUnavailable) or Error(kUnknownDescription).
  virtual std::vector<double> embed(const std::string& text) = 0;
};

// Offline embedder backed by a JSON object {"text": [numbers...]}.
class TableEmbedder : public Embedder {
 public:
  explicit TableEmbedder(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
  // Throws Error(kIoError), Error(kParseError).
  static TableEmbedder from_file(const std::filesystem::path& path);

  std::vector<double> embed(const std::string& text) override;

 private:
  std::map<std::string, std::vector<double>> table_;
};

struct RemoteEmbedderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;
};

// POST {base_url}/embeddings {"model", "input": [text]}; reads
// data[0].embedding.
class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {}
  std::vector<double> embed(const std::string& text) override;

 private:
  RemoteEmbedderConfig config_;
};

// Unit-normalized embedding of describe_object(node).
std::vector<double> embed_description(const ObjectNode& node, Embedder& embedder);

struct AssetFit {
  Vec3 scale;
  double anisotropy = 1.0;  // largest scale over smallest
};

// Throws Error(kInvalidArgument) for non-positive dims.
AssetFit fit_asset(Vec3 native, Vec3 target);

}  // namespace roomgraph
