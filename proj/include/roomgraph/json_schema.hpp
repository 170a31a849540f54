#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace roomgraph {

// Validator for the draft-07 subset our shipped schemas use: type, enum,
// const, properties, required, additionalProperties, items, min/maxItems,
// minimum/maximum (and exclusive forms), minLength, pattern, anyOf, allOf,
// oneOf and local "#/definitions/..." references.
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema);

  // One message per violation, prefixed with the JSON pointer of the value.
  std::vector<std::string> validate(const nlohmann::json& instance) const;
  bool accepts(const nlohmann::json& instance) const { return validate(instance).empty(); }

  const nlohmann::json& schema() const { return schema_; }

 private:
  void check(const nlohmann::json& schema, const nlohmann::json& value, const std::string& path,
             std::vector<std::string>& errors, int depth) const;
  const nlohmann::json& resolve(const nlohmann::json& schema) const;

  nlohmann::json schema_;
};

}  // namespace roomgraph
