#include "roomgraph/prompts.hpp"

#include <memory>
#include <mutex>

#include "roomgraph/assets.hpp"
#include "roomgraph/error.hpp"

namespace roomgraph {

namespace {

std::string_view schema_name_for(std::string_view stage) {
  if (stage == "engineer") return "engineer_object";
  if (stage == "designer" || stage == "architect" || stage == "corrector" || stage == "refiner") return stage;
  throw Error(ErrorCode::kUnknownStage, "no agent stage named " + std::string(stage));
}

}  // namespace

std::string fill_template(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string token = "{" + key + "}";
    for (size_t pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
      text.replace(pos, token.size(), value);
    }
  }
  return text;
}

std::string default_system_prompt(std::string_view stage) {
  const std::string schema_name(schema_name_for(stage));
  const std::string prompt(embedded_asset("prompts/" + std::string(stage) + ".txt"));
  const std::string schema(embedded_asset("schemas/" + schema_name + ".schema.json"));
  return fill_template(prompt, {{"json_schema", schema}});
}

const SchemaValidator& shipped_schema(std::string_view name) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<SchemaValidator>, std::less<>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(name);
  if (it == cache.end()) {
    const std::string text(embedded_asset("schemas/" + std::string(name) + ".schema.json"));
    it = cache.emplace(std::string(name), std::make_unique<SchemaValidator>(nlohmann::json::parse(text))).first;
  }
  return *it->second;
}

}  // namespace roomgraph
