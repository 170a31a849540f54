#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace roomgraph {

struct DecodingParams {
  double temperature = 0.7;
  double top_p = 1.0;
  bool structured_output = true;  // ask for a JSON-only response
};

// Throws Error(kInvalidArgument) when out of range.
void validate_decoding(const DecodingParams& params);

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
};

struct GenerationRequest {
  std::string stage;
  std::string system_prompt;
  std::vector<ChatMessage> history;  // earlier turns of this call, oldest first
  std::string user_message;
  DecodingParams decoding;
};

// Stateless text generator. Implementations must be safe to call from
// several threads at once.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Throws Error(kBackendUnavailable) when no response can be produced.
  virtual std::string generate(const GenerationRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Fixture key: stage plus the FNV-1a 64 hash of the conversation
// (history and current user message), as 16 lower-case hex digits.
std::string request_key(const GenerationRequest& request);
std::string fnv1a64_hex(std::string_view data);

// Serves responses from <dir>/<stage>/<hash>.json files, each holding
// {"stage", "key", "user_message", "response"}.
class CannedBackend : public GenerationBackend {
 public:
  explicit CannedBackend(std::filesystem::path dir);

  std::string generate(const GenerationRequest& request) override;
  std::string name() const override { return "canned"; }
  size_t size() const { return responses_.size(); }
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> responses_;  // "<stage>/<hash>" -> response
};

// Wraps another backend and writes every exchange as a canned fixture.
class RecordingBackend : public GenerationBackend {
 public:
  RecordingBackend(GenerationBackend& inner, std::filesystem::path dir);

  std::string generate(const GenerationRequest& request) override;
  std::string name() const override { return "recording(" + inner_.name() + ")"; }

 private:
  GenerationBackend& inner_;
  std::filesystem::path dir_;
  std::mutex mu_;
};

// In-process responder, mostly for tests and fixture authoring.
class ScriptedBackend : public GenerationBackend {
 public:
  using Responder = std::function<std::string(const GenerationRequest&)>;
  explicit ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

  std::string generate(const GenerationRequest& request) override;
  std::string name() const override { return "scripted"; }
  int calls() const;

 private:
  Responder responder_;
  mutable std::mutex mu_;
  int calls_ = 0;
};

struct RemoteBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
};

// OpenAI-style chat-completion endpoint: POST {base_url}/chat/completions.
class RemoteChatBackend : public GenerationBackend {
 public:
  explicit RemoteChatBackend(RemoteBackendConfig config);

  std::string generate(const GenerationRequest& request) override;
  std::string name() const override { return "remote:" + config_.model; }

  // Request body as sent on the wire; exposed for tests.
  nlohmann::json request_body(const GenerationRequest& request) const;
  // Extracts choices[0].message.content. Throws Error(kBackendUnavailable).
  static std::string parse_response(const std::string& body);

 private:
  RemoteBackendConfig config_;
};

// Extracts the first JSON value from model text, tolerating code fences and
// surrounding prose. Throws Error(kParseError).
nlohmann::json extract_json(std::string_view text);

}  // namespace roomgraph
