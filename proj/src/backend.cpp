#include "roomgraph/backend.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "roomgraph/error.hpp"
#include "roomgraph/http.hpp"

namespace roomgraph {

namespace fs = std::filesystem;
using nlohmann::json;

void validate_decoding(const DecodingParams& params) {
  if (!(params.temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (!(params.top_p > 0.0 && params.top_p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
}

std::string fnv1a64_hex(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string request_key(const GenerationRequest& request) {
  std::string conv;
  for (const ChatMessage& m : request.history) {
    conv += m.role;
    conv += '\x1f';
    conv += m.content;
    conv += '\x1e';
  }
  conv += "user";
  conv += '\x1f';
  conv += request.user_message;
  return request.stage + "/" + fnv1a64_hex(conv);
}

CannedBackend::CannedBackend(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw Error(ErrorCode::kConfigError, "fixture directory not found: " + dir_.string());
  for (const auto& stage_dir : fs::directory_iterator(dir_)) {
    if (!stage_dir.is_directory()) continue;
    for (const auto& file : fs::directory_iterator(stage_dir.path())) {
      if (file.path().extension() != ".json") continue;
      std::ifstream in(file.path());
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParseError, file.path().string() + ": " + e.what());
      }
      const std::string key = stage_dir.path().filename().string() + "/" + file.path().stem().string();
      responses_[key] = doc.at("response").get<std::string>();
    }
  }
}

std::string CannedBackend::generate(const GenerationRequest& request) {
  const std::string key = request_key(request);
  auto it = responses_.find(key);
  if (it == responses_.end()) {
    throw Error(ErrorCode::kBackendUnavailable, "no canned response for " + key + " in " + dir_.string());
  }
  return it->second;
}

RecordingBackend::RecordingBackend(GenerationBackend& inner, fs::path dir) : inner_(inner), dir_(std::move(dir)) {}

std::string RecordingBackend::generate(const GenerationRequest& request) {
  std::string response = inner_.generate(request);
  const std::string key = request_key(request);
  const fs::path path = dir_ / (key + ".json");
  json doc = {{"stage", request.stage}, {"key", key}, {"user_message", request.user_message}, {"response", response}};
  std::lock_guard<std::mutex> lock(mu_);
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIoError, "cannot write fixture " + path.string());
  return response;
}

std::string ScriptedBackend::generate(const GenerationRequest& request) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
  }
  return responder_(request);
}

int ScriptedBackend::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

RemoteChatBackend::RemoteChatBackend(RemoteBackendConfig config) : config_(std::move(config)) {
  parse_url(config_.base_url);
}

json RemoteChatBackend::request_body(const GenerationRequest& request) const {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  for (const ChatMessage& m : request.history) messages.push_back({{"role", m.role}, {"content", m.content}});
  messages.push_back({{"role", "user"}, {"content", request.user_message}});
  json body = {{"model", config_.model},
               {"messages", std::move(messages)},
               {"temperature", request.decoding.temperature},
               {"top_p", request.decoding.top_p}};
  if (request.decoding.structured_output) body["response_format"] = {{"type", "json_object"}};
  return body;
}

std::string RemoteChatBackend::parse_response(const std::string& body) {
  try {
    const json doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBackendUnavailable, std::string("malformed chat response: ") + e.what());
  }
}

std::string RemoteChatBackend::generate(const GenerationRequest& request) {
  validate_decoding(request.decoding);
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kBackendUnavailable, "environment variable " + config_.api_key_env + " is not set");
  }
  std::string url = config_.base_url;
  if (!url.empty() && url.back() == '/') url.pop_back();
  url += "/chat/completions";
  const HttpResult res = http_post_json(url, request_body(request).dump(),
                                        {{"Authorization", std::string("Bearer ") + key}}, config_.timeout_seconds);
  if (res.status != 200) {
    throw Error(ErrorCode::kBackendUnavailable, url + " returned HTTP " + std::to_string(res.status));
  }
  return parse_response(res.body);
}

namespace {

// End offset (exclusive) of the bracketed value starting at text[start], or npos.
size_t matching_end(std::string_view text, size_t start) {
  int depth = 0;
  bool in_string = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

json extract_json(std::string_view text) {
  json out = json::parse(text.begin(), text.end(), nullptr, false);
  if (!out.is_discarded()) return out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{' && text[i] != '[') continue;
    const size_t end = matching_end(text, i);
    if (end == std::string_view::npos) continue;
    out = json::parse(text.begin() + i, text.begin() + end, nullptr, false);
    if (!out.is_discarded()) return out;
  }
  throw Error(ErrorCode::kParseError, "no JSON value found in response");
}

}  // namespace roomgraph
