#pragma once

#include <map>
#include <string>
#include <string_view>

#include "roomgraph/json_schema.hpp"

namespace roomgraph {

// Embedded system prompt for an agent stage ("designer", "architect",
// "engineer", "corrector", "refiner") with {json_schema} filled in.
// Throws Error(kUnknownStage).
std::string default_system_prompt(std::string_view stage);

// Replaces each "{key}" with its value; other braces are left alone.
std::string fill_template(std::string text, const std::map<std::string, std::string>& values);

// Validator for a shipped schema by short name, e.g. "designer" or "grade".
const SchemaValidator& shipped_schema(std::string_view name);

}  // namespace roomgraph
