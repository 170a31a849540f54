#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace roomgraph {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
// Throws Error(kIoError).
std::string file_sha256_hex(const std::filesystem::path& path);

// Standard base64 with padding.
std::string base64_encode(std::string_view data);

}  // namespace roomgraph
