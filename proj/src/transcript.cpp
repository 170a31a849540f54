#include "roomgraph/transcript.hpp"

#include "roomgraph/error.hpp"

namespace roomgraph {

using nlohmann::json;

json transcript_to_json(const StageTranscript& t) {
  json calls = json::array();
  for (const CallRecord& c : t.calls) {
    calls.push_back({{"key", c.key},
                     {"label", c.label},
                     {"attempt", c.attempt},
                     {"user_message", c.user_message},
                     {"response", c.response},
                     {"errors", c.errors}});
  }
  return {{"stage", t.stage},     {"system_prompt", t.system_prompt}, {"calls", std::move(calls)},
          {"retry_count", t.retry_count}, {"output", t.output},  {"notes", t.notes}};
}

StageTranscript transcript_from_json(const json& j) {
  StageTranscript t;
  try {
    t.stage = j.at("stage").get<std::string>();
    t.system_prompt = j.value("system_prompt", "");
    for (const json& c : j.value("calls", json::array())) {
      CallRecord r;
      r.key = c.value("key", "");
      r.label = c.value("label", "");
      r.attempt = c.value("attempt", 0);
      r.user_message = c.value("user_message", "");
      r.response = c.value("response", "");
      r.errors = c.value("errors", std::vector<std::string>{});
      t.calls.push_back(std::move(r));
    }
    t.retry_count = j.value("retry_count", 0);
    t.output = j.value("output", json());
    t.notes = j.value("notes", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("transcript: ") + e.what());
  }
  return t;
}

std::string repair_message(const std::vector<std::string>& errors) {
  std::string msg = "The JSON object you returned is invalid:\n";
  for (const auto& e : errors) msg += "- " + e + "\n";
  msg += "Return only the corrected JSON object, following the schema exactly.";
  return msg;
}

StructuredResult call_structured(GenerationBackend& backend, const StructuredCall& call) {
  StructuredResult result;
  GenerationRequest req;
  req.stage = call.stage;
  req.system_prompt = call.system_prompt;
  req.user_message = call.user_message;
  req.decoding = call.decoding;

  for (int attempt = 0; attempt <= call.max_retries; ++attempt) {
    CallRecord rec;
    rec.key = request_key(req);
    rec.label = call.label;
    rec.attempt = attempt;
    rec.user_message = req.user_message;
    rec.response = backend.generate(req);

    std::optional<json> parsed;
    try {
      parsed = extract_json(rec.response);
    } catch (const Error& e) {
      rec.errors.push_back(std::string("response is not JSON: ") + e.what());
    }
    if (parsed) rec.errors = call.check ? call.check(*parsed) : std::vector<std::string>{};

    const bool accepted = rec.errors.empty();
    result.retries = attempt;
    const std::vector<std::string> errors = rec.errors;
    const std::string response = rec.response;
    result.calls.push_back(std::move(rec));
    if (accepted) {
      result.value = std::move(parsed);
      return result;
    }
    req.history.push_back({"user", req.user_message});
    req.history.push_back({"assistant", response});
    req.user_message = repair_message(errors);
  }
  return result;
}

}  // namespace roomgraph
