#include "roomgraph/json_schema.hpp"

#include <cmath>
#include <regex>

#include "roomgraph/error.hpp"

namespace roomgraph {

using nlohmann::json;

namespace {

bool matches_type(const std::string& type, const json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
  }
  return false;
}

std::string pointer_join(const std::string& base, const std::string& token) {
  return base + "/" + token;
}

}  // namespace

SchemaValidator::SchemaValidator(json schema) : schema_(std::move(schema)) {
  if (!schema_.is_object() && !schema_.is_boolean()) {
    throw Error(ErrorCode::kInvalidArgument, "schema must be an object or boolean");
  }
}

std::vector<std::string> SchemaValidator::validate(const json& instance) const {
  std::vector<std::string> errors;
  check(schema_, instance, "", errors, 0);
  return errors;
}

const json& SchemaValidator::resolve(const json& schema) const {
  if (!schema.is_object() || !schema.contains("$ref")) return schema;
  const std::string ref = schema["$ref"].get<std::string>();
  if (ref.rfind("#", 0) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "only local $ref supported: " + ref);
  }
  const json::json_pointer ptr(ref.substr(1));
  if (!schema_.contains(ptr)) throw Error(ErrorCode::kInvalidArgument, "unresolved $ref " + ref);
  return schema_.at(ptr);
}

void SchemaValidator::check(const json& raw_schema, const json& v, const std::string& path,
                            std::vector<std::string>& errors, int depth) const {
  if (depth > 64) {
    errors.push_back(path + ": schema nesting too deep");
    return;
  }
  const json& s = resolve(raw_schema);
  if (s.is_boolean()) {
    if (!s.get<bool>()) errors.push_back(path + ": no value allowed here");
    return;
  }
  const std::string at = path.empty() ? "(root)" : path;

  if (s.contains("type")) {
    const json& t = s["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = matches_type(t.get<std::string>(), v);
    } else if (t.is_array()) {
      for (const auto& alt : t) ok = ok || matches_type(alt.get<std::string>(), v);
    }
    if (!ok) {
      errors.push_back(at + ": expected type " + t.dump() + ", got " + std::string(v.type_name()));
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& option : s["enum"]) found = found || option == v;
    if (!found) errors.push_back(at + ": value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (s.contains("const") && s["const"] != v) {
    errors.push_back(at + ": expected constant " + s["const"].dump());
  }

  if (v.is_number()) {
    const double d = v.get<double>();
    if (s.contains("minimum") && d < s["minimum"].get<double>()) {
      errors.push_back(at + ": " + v.dump() + " is below minimum " + s["minimum"].dump());
    }
    if (s.contains("maximum") && d > s["maximum"].get<double>()) {
      errors.push_back(at + ": " + v.dump() + " exceeds maximum " + s["maximum"].dump());
    }
    if (s.contains("exclusiveMinimum") && d <= s["exclusiveMinimum"].get<double>()) {
      errors.push_back(at + ": " + v.dump() + " must be greater than " + s["exclusiveMinimum"].dump());
    }
    if (s.contains("exclusiveMaximum") && d >= s["exclusiveMaximum"].get<double>()) {
      errors.push_back(at + ": " + v.dump() + " must be less than " + s["exclusiveMaximum"].dump());
    }
  }

  if (v.is_string()) {
    const std::string& str = v.get_ref<const std::string&>();
    if (s.contains("minLength") && str.size() < s["minLength"].get<size_t>()) {
      errors.push_back(at + ": string shorter than " + s["minLength"].dump());
    }
    if (s.contains("pattern")) {
      const std::regex re(s["pattern"].get<std::string>(), std::regex::ECMAScript);
      if (!std::regex_search(str, re)) {
        errors.push_back(at + ": \"" + str + "\" does not match pattern " + s["pattern"].dump());
      }
    }
  }

  if (v.is_object()) {
    if (s.contains("required")) {
      for (const auto& key : s["required"]) {
        if (!v.contains(key.get<std::string>())) {
          errors.push_back(at + ": missing required property \"" + key.get<std::string>() + "\"");
        }
      }
    }
    const json* props = s.contains("properties") ? &s["properties"] : nullptr;
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string child = pointer_join(path, it.key());
      if (props && props->contains(it.key())) {
        check((*props)[it.key()], it.value(), child, errors, depth + 1);
      } else if (s.contains("additionalProperties")) {
        const json& extra = s["additionalProperties"];
        if (extra.is_boolean() && !extra.get<bool>()) {
          errors.push_back(at + ": unexpected property \"" + it.key() + "\"");
        } else if (extra.is_object()) {
          check(extra, it.value(), child, errors, depth + 1);
        }
      }
    }
  }

  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<size_t>()) {
      errors.push_back(at + ": fewer than " + s["minItems"].dump() + " items");
    }
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<size_t>()) {
      errors.push_back(at + ": more than " + s["maxItems"].dump() + " items");
    }
    if (s.contains("items") && s["items"].is_object()) {
      for (size_t i = 0; i < v.size(); ++i) {
        check(s["items"], v[i], pointer_join(path, std::to_string(i)), errors, depth + 1);
      }
    }
  }

  if (s.contains("allOf")) {
    for (const auto& sub : s["allOf"]) check(sub, v, path, errors, depth + 1);
  }
  if (s.contains("anyOf") || s.contains("oneOf")) {
    const bool one = s.contains("oneOf");
    const json& alts = one ? s["oneOf"] : s["anyOf"];
    int passing = 0;
    for (const auto& sub : alts) {
      std::vector<std::string> sub_errors;
      check(sub, v, path, sub_errors, depth + 1);
      if (sub_errors.empty()) ++passing;
    }
    if (passing == 0) errors.push_back(at + ": no alternative in " + std::string(one ? "oneOf" : "anyOf") + " matched");
    if (one && passing > 1) errors.push_back(at + ": more than one oneOf alternative matched");
  }
}

}  // namespace roomgraph
