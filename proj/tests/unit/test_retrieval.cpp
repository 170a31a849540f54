#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "oracles.hpp"
#include "roomgraph/error.hpp"
#include "roomgraph/retrieval.hpp"

using namespace roomgraph;
using namespace roomgraph::testing;

namespace {

AssetIndex basis_index() {
  std::vector<AssetRecord> records;
  for (int i = 0; i < 3; ++i) {
    AssetRecord r{"asset_" + std::to_string(i + 1), {0.f, 0.f, 0.f, 0.f}, {1, 1, 1}, "", ""};
    r.embedding[i] = 1.f;
    records.push_back(r);
  }
  return build_index(records);
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

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "roomgraph_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("basis vector query finds its own record") {
  auto index = basis_index();
  auto top = retrieve(index, {0, 1, 0, 0}, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].id == "asset_2");
  CHECK(top[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonal query ties are ordered by id") {
  auto index = basis_index();
  auto top = retrieve(index, {0, 0, 0, 3}, 3);
  REQUIRE(top.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(top[i].id == "asset_" + std::to_string(i + 1));
    CHECK(top[i].similarity == 0.0);
  }
}

TEST_CASE("k larger than the index returns every record") {
  CHECK(retrieve(basis_index(), {1, 1, 1, 1}, 10).size() == 3);
}

TEST_CASE("top-k matches a brute-force scan") {
  auto index = build_index(random_asset_records(100, 8, 7));
  for (int q = 0; q < 20; ++q) {
    CAPTURE(q);
    auto query = random_query(8, 1000 + q);
    for (int k : {1, 2, 3, 10}) {
      auto got = retrieve(index, query, k);
      auto want = oracle_top_k(index, query, k);
      REQUIRE(got.size() == want.size());
      for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(std::abs(got[i].similarity - want[i].similarity) <= 1e-9);
      }
    }
  }
}

TEST_CASE("results for k are a prefix of results for k+1") {
  auto index = build_index(random_asset_records(100, 8, 11));
  for (int q = 0; q < 20; ++q) {
    auto query = random_query(8, 2000 + q);
    for (int k = 1; k <= 3; ++k) {
      auto a = retrieve(index, query, k);
      auto b = retrieve(index, query, k + 1);
      REQUIRE(b.size() == a.size() + 1);
      for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
  }
}

TEST_CASE("positive scaling of the query changes nothing") {
  auto index = build_index(random_asset_records(50, 8, 3));
  for (int q = 0; q < 10; ++q) {
    auto query = random_query(8, 300 + q);
    auto base = retrieve(index, query, 5);
    for (double s : {1e-3, 0.5, 7.0, 1e4}) {
      auto scaled = query;
      for (double& x : scaled) x *= s;
      auto got = retrieve(index, scaled, 5);
      REQUIRE(got.size() == base.size());
      for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == base[i].id);
        CHECK(std::abs(got[i].similarity - base[i].similarity) <= 1e-12);
      }
    }
  }
}

TEST_CASE("build_index normalizes and sorts") {
  auto records = random_asset_records(20, 5, 1);
  std::reverse(records.begin(), records.end());
  auto index = build_index(records);
  CHECK(index.dimension == 5);
  CHECK(index.checksum.size() == 64);
  for (size_t i = 0; i < index.size(); ++i) {
    double n = 0;
    for (float f : index.records[i].embedding) n += double(f) * f;
    CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-6);
    if (i > 0) CHECK(index.records[i - 1].id < index.records[i].id);
  }
  CHECK(index.find("asset_007") != nullptr);
  CHECK(index.find("nope") == nullptr);
}

TEST_CASE("build_index rejects bad input") {
  auto records = random_asset_records(3, 4, 1);
  CHECK(code_of([] { build_index({}); }) == ErrorCode::kInvalidArgument);

  auto mixed = records;
  mixed[1].embedding.push_back(1.f);
  CHECK(code_of([&] { build_index(mixed); }) == ErrorCode::kDimensionMismatch);

  auto dup = records;
  dup[2].id = dup[0].id;
  CHECK(code_of([&] { build_index(dup); }) == ErrorCode::kDuplicateId);

  auto zero = records;
  zero[0].embedding.assign(4, 0.f);
  CHECK(code_of([&] { build_index(zero); }) == ErrorCode::kInvalidArgument);

  auto flat = records;
  flat[0].native_size = {1, 0, 1};
  CHECK(code_of([&] { build_index(flat); }) == ErrorCode::kInvalidArgument);

  auto index = build_index(records);
  CHECK(code_of([&] { retrieve(index, {1, 0, 0}, 1); }) == ErrorCode::kDimensionMismatch);
  CHECK(code_of([&] { retrieve(index, {1, 0, 0, 0}, 0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { retrieve(index, {0, 0, 0, 0}, 1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("index round trip gives identical results") {
  auto records = random_asset_records(60, 8, 5);
  records[3].name = "tab\there\nnewline \\ back";
  records[4].uri = "https://example.org/a b.glb";
  auto index = build_index(records);
  auto path = temp_path("roundtrip.rgai");
  write_index(index, path);
  CHECK(std::filesystem::exists(path.string() + ".tsv"));
  auto back = read_index(path);
  CHECK(back.dimension == index.dimension);
  CHECK(back.checksum == index.checksum);
  REQUIRE(back.size() == index.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back.records[i].id == index.records[i].id);
    CHECK(back.records[i].embedding == index.records[i].embedding);
    CHECK(back.records[i].native_size == index.records[i].native_size);
    CHECK(back.records[i].uri == index.records[i].uri);
    CHECK(back.records[i].name == index.records[i].name);
  }
  for (int q = 0; q < 20; ++q) {
    auto query = random_query(8, 500 + q);
    CHECK(retrieve(back, query, 3) == retrieve(index, query, 3));
  }
}

TEST_CASE("read_index rejects corrupt files") {
  auto path = temp_path("corrupt.rgai");
  {
    std::ofstream f(path, std::ios::binary);
    f << "XXXXjunk";
  }
  CHECK(code_of([&] { read_index(path); }) == ErrorCode::kParseError);
  CHECK(code_of([&] { read_index(temp_path("missing.rgai")); }) == ErrorCode::kIoError);

  auto index = build_index(random_asset_records(4, 3, 2));
  write_index(index, path);
  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  bytes.resize(bytes.size() - 5);
  {
    std::ofstream f(path, std::ios::binary);
    f << bytes;
  }
  CHECK(code_of([&] { read_index(path); }) == ErrorCode::kParseError);
}

TEST_CASE("description and table embedder") {
  ObjectNode desk{.id = "desk_1", .name = "desk", .style = "modern", .material = "walnut"};
  CHECK(describe_object(desk) == desk.style_material() + " desk");
  std::map<std::string, std::vector<double>> entries{{describe_object(desk), {3.0, 4.0}}};
  TableEmbedder table(entries);
  auto v = embed_description(desk, table);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));
  ObjectNode chair{.id = "chair_1", .name = "chair"};
  CHECK(code_of([&] { embed_description(chair, table); }) == ErrorCode::kUnknownDescription);
}

TEST_CASE("remote embedder without a server is unavailable") {
  RemoteEmbedder remote({.base_url = "http://127.0.0.1:9", .api_key_env = "ROOMGRAPH_UNSET_KEY", .timeout_seconds = 1});
  CHECK(code_of([&] { remote.embed("modern desk"); }) == ErrorCode::kEmbedderUnavailable);
}

TEST_CASE("fit_asset examples") {
  auto f = fit_asset({1, 1, 1}, {2, 1, 0.5});
  CHECK(f.scale == Vec3{2, 1, 0.5});
  CHECK(f.anisotropy == doctest::Approx(4.0));
  f = fit_asset({0.7, 0.3, 1.1}, {0.7, 0.3, 1.1});
  CHECK(f.scale == Vec3{1, 1, 1});
  CHECK(f.anisotropy == 1.0);
  f = fit_asset({0.5, 1.0, 0.5}, {1.0, 2.0, 1.0});
  CHECK(f.scale == Vec3{2, 2, 2});
  CHECK(f.anisotropy == 1.0);
  CHECK(code_of([] { fit_asset({0, 1, 1}, {1, 1, 1}); }) == ErrorCode::kInvalidArgument);
}
