#include "roomgraph/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "roomgraph/checksum.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/http.hpp"

namespace roomgraph {

static_assert(std::endian::native == std::endian::little, "index format is little-endian");

namespace {

constexpr char kMagic[4] = {'R', 'G', 'A', 'I'};
constexpr uint32_t kVersion = 1;
constexpr size_t kIdBytes = 64;

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorCode::kParseError, "asset index truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}

std::string record_block(const AssetIndex& index) {
  std::string out;
  for (const AssetRecord& r : index.records) {
    std::string id = r.id;
    id.resize(kIdBytes, '\0');
    out += id;
    for (float f : r.embedding) put(out, f);
    for (int a = 0; a < 3; ++a) put(out, r.native_size[a]);
  }
  return out;
}

std::string escape_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(const std::string& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    const char n = s[++i];
    out += n == 't' ? '\t' : n == 'n' ? '\n' : n;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const AssetRecord* AssetIndex::find(const std::string& id) const {
  auto it = std::lower_bound(records.begin(), records.end(), id,
                             [](const AssetRecord& r, const std::string& key) { return r.id < key; });
  return it != records.end() && it->id == id ? &*it : nullptr;
}

AssetIndex build_index(std::vector<AssetRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "asset index needs at least one record");
  AssetIndex index;
  index.dimension = static_cast<int>(records.front().embedding.size());
  if (index.dimension == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dimension is zero");
  std::set<std::string> ids;
  for (AssetRecord& r : records) {
    if (static_cast<int>(r.embedding.size()) != index.dimension) {
      throw Error(ErrorCode::kDimensionMismatch, r.id + " has dimension " + std::to_string(r.embedding.size()) +
                                                     ", expected " + std::to_string(index.dimension));
    }
    if (!ids.insert(r.id).second) throw Error(ErrorCode::kDuplicateId, r.id);
    if (r.id.empty() || r.id.size() >= kIdBytes || r.id.find('\0') != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "asset id must be 1-63 bytes: " + r.id);
    }
    if (!(r.native_size.x > 0 && r.native_size.y > 0 && r.native_size.z > 0)) {
      throw Error(ErrorCode::kInvalidArgument, r.id + " has a non-positive native size");
    }
    const double n = norm(std::vector<double>(r.embedding.begin(), r.embedding.end()));
    if (!(n > 0) || !std::isfinite(n)) throw Error(ErrorCode::kInvalidArgument, r.id + " has a zero embedding");
    for (float& f : r.embedding) f = static_cast<float>(f / n);
  }
  std::sort(records.begin(), records.end(), [](const AssetRecord& a, const AssetRecord& b) { return a.id < b.id; });
  index.records = std::move(records);
  index.checksum = sha256_hex(record_block(index));
  return index;
}

void write_index(const AssetIndex& index, const std::filesystem::path& path) {
  std::string bin(kMagic, 4);
  put(bin, kVersion);
  put(bin, static_cast<uint32_t>(index.dimension));
  put(bin, static_cast<uint32_t>(index.records.size()));
  bin += record_block(index);
  std::ofstream out(path, std::ios::binary);
  out.write(bin.data(), static_cast<std::streamsize>(bin.size()));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());

  std::ofstream tsv(path.string() + ".tsv", std::ios::binary);
  tsv << "id\tname\turi\n";
  for (const AssetRecord& r : index.records) {
    tsv << escape_field(r.id) << '\t' << escape_field(r.name) << '\t' << escape_field(r.uri) << '\n';
  }
  if (!tsv) throw Error(ErrorCode::kIoError, "cannot write " + path.string() + ".tsv");
}

AssetIndex read_index(const std::filesystem::path& path) {
  const std::string bin = read_file(path);
  if (bin.size() < 16 || std::memcmp(bin.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kParseError, path.string() + " is not an asset index");
  }
  size_t pos = 4;
  if (take<uint32_t>(bin, pos) != kVersion) throw Error(ErrorCode::kParseError, "unsupported asset index version");
  const auto dim = take<uint32_t>(bin, pos);
  const auto count = take<uint32_t>(bin, pos);
  const size_t record_bytes = kIdBytes + dim * sizeof(float) + 3 * sizeof(double);
  if (bin.size() != 16 + count * record_bytes) throw Error(ErrorCode::kParseError, "asset index size mismatch");

  std::map<std::string, std::pair<std::string, std::string>> meta;
  std::istringstream tsv(read_file(path.string() + ".tsv"));
  std::string line;
  std::getline(tsv, line);
  while (std::getline(tsv, line)) {
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw Error(ErrorCode::kParseError, "bad sidecar row");
    meta[unescape_field(line.substr(0, t1))] = {unescape_field(line.substr(t1 + 1, t2 - t1 - 1)),
                                                unescape_field(line.substr(t2 + 1))};
  }

  AssetIndex index;
  index.dimension = static_cast<int>(dim);
  for (uint32_t i = 0; i < count; ++i) {
    AssetRecord r;
    r.id = std::string(bin.data() + pos, strnlen(bin.data() + pos, kIdBytes));
    pos += kIdBytes;
    r.embedding.resize(dim);
    for (float& f : r.embedding) f = take<float>(bin, pos);
    for (int a = 0; a < 3; ++a) r.native_size[a] = take<double>(bin, pos);
    if (auto it = meta.find(r.id); it != meta.end()) std::tie(r.name, r.uri) = it->second;
    index.records.push_back(std::move(r));
  }
  index.checksum = sha256_hex(bin.substr(16));
  return index;
}

std::vector<Match> retrieve(const AssetIndex& index, const std::vector<double>& query, int k) {
  if (static_cast<int>(query.size()) != index.dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "query has dimension " + std::to_string(query.size()) + ", index has " +
                                                   std::to_string(index.dimension));
  }
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const double qn = norm(query);
  if (!(qn > 0)) throw Error(ErrorCode::kInvalidArgument, "query vector is zero");
  std::vector<Match> all;
  all.reserve(index.records.size());
  for (const AssetRecord& r : index.records) {
    double dot = 0.0, rn = 0.0;
    for (int i = 0; i < index.dimension; ++i) {
      const double e = r.embedding[i];
      dot += e * query[i];
      rn += e * e;
    }
    all.push_back({r.id, dot / (qn * std::sqrt(rn))});
  }
  const auto better = [](const Match& a, const Match& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
  };
  const size_t n = std::min(all.size(), static_cast<size_t>(k));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
  all.resize(n);
  return all;
}

std::string describe_object(const ObjectNode& node) { return node.style_material() + " " + node.name; }

TableEmbedder TableEmbedder::from_file(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    return TableEmbedder(j.get<std::map<std::string, std::vector<double>>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

std::vector<double> TableEmbedder::embed(const std::string& text) {
  auto it = table_.find(text);
  if (it == table_.end()) throw Error(ErrorCode::kUnknownDescription, text);
  return it->second;
}

std::vector<double> RemoteEmbedder::embed(const std::string& text) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) throw Error(ErrorCode::kEmbedderUnavailable, config_.api_key_env + " is not set");
  const nlohmann::json body = {{"model", config_.model}, {"input", {text}}};
  HttpResult res;
  try {
    res = http_post_json(config_.base_url + "/embeddings", body.dump(),
                         {{"Authorization", std::string("Bearer ") + key}}, config_.timeout_seconds);
  } catch (const Error& e) {
    throw Error(ErrorCode::kEmbedderUnavailable, e.what());
  }
  if (res.status != 200) throw Error(ErrorCode::kEmbedderUnavailable, "HTTP " + std::to_string(res.status));
  try {
    return nlohmann::json::parse(res.body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEmbedderUnavailable, std::string("bad embedding response: ") + e.what());
  }
}

std::vector<double> embed_description(const ObjectNode& node, Embedder& embedder) {
  std::vector<double> v = embedder.embed(describe_object(node));
  const double n = norm(v);
  if (!(n > 0)) throw Error(ErrorCode::kEmbedderUnavailable, "zero embedding for " + node.id);
  for (double& x : v) x /= n;
  return v;
}

AssetFit fit_asset(Vec3 native, Vec3 target) {
  for (int a = 0; a < 3; ++a) {
    if (!(native[a] > 0 && target[a] > 0)) throw Error(ErrorCode::kInvalidArgument, "dimensions must be positive");
  }
  AssetFit fit;
  fit.scale = {target.x / native.x, target.y / native.y, target.z / native.z};
  const double hi = std::max({fit.scale.x, fit.scale.y, fit.scale.z});
  const double lo = std::min({fit.scale.x, fit.scale.y, fit.scale.z});
  fit.anisotropy = hi / lo;
  return fit;
}

}  // namespace roomgraph
