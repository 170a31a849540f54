#include "roomgraph/http.hpp"

#include <httplib.h>

#include "roomgraph/error.hpp"

namespace roomgraph {

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "not a URL: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(ErrorCode::kInvalidArgument, "unsupported scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) throw Error(ErrorCode::kInvalidArgument, "missing host: " + url);
  return out;
}

HttpResult http_post_json(const std::string& url, const std::string& body,
                          const std::map<std::string, std::string>& headers, int timeout_seconds) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.origin);
  client.set_connection_timeout(timeout_seconds);
  client.set_read_timeout(timeout_seconds);
  client.set_write_timeout(timeout_seconds);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(parsed.path, h, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable, url + ": " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

}  // namespace roomgraph
