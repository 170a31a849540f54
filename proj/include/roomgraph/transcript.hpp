#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roomgraph/backend.hpp"

namespace roomgraph {

struct CallRecord {
  std::string key;  // canned-fixture key of this exchange
  std::string label;  // what the call was for, e.g. an object id
  int attempt = 0;    // 0 = first try
  std::string user_message;
  std::string response;
  std::vector<std::string> errors;  // why the response was rejected; empty when accepted
};

struct StageTranscript {
  std::string stage;
  std::string system_prompt;
  std::vector<CallRecord> calls;
  int retry_count = 0;  // most retries any single request of this stage needed
  nlohmann::json output;
  std::vector<std::string> notes;
  double duration_ms = 0.0;  // not serialized; see timings in the bundle
};

nlohmann::json transcript_to_json(const StageTranscript& t);
StageTranscript transcript_from_json(const nlohmann::json& j);

using JsonCheck = std::function<std::vector<std::string>(const nlohmann::json&)>;

struct StructuredCall {
  std::string stage;
  std::string label;
  std::string system_prompt;
  std::string user_message;
  DecodingParams decoding;
  int max_retries = 3;
  JsonCheck check;  // schema plus semantic checks; empty result = accept
};

struct StructuredResult {
  std::optional<nlohmann::json> value;  // unset when retries ran out
  std::vector<CallRecord> calls;
  int retries = 0;
};

// Sends the request, validates the reply and, on rejection, sends a repair
// message listing the errors, up to max_retries more times. Backend errors
// propagate.
StructuredResult call_structured(GenerationBackend& backend, const StructuredCall& call);

std::string repair_message(const std::vector<std::string>& errors);

}  // namespace roomgraph
