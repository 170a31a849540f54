#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace roomgraph {

// Prompts and schemas compiled into the library from assets/prompts and
// docs/schemas. Names look like "prompts/designer.txt" or
// "schemas/engineer_object.schema.json". Throws Error(kMissingInput).
std::string_view embedded_asset(std::string_view name);
std::vector<std::string> embedded_asset_names();

}  // namespace roomgraph
