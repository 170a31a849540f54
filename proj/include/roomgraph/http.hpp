#pragma once

#include <map>
#include <string>

namespace roomgraph {

struct HttpResult {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to an absolute http(s) URL. Throws Error(kBackendUnavailable)
// on transport failure; HTTP error statuses are returned, not thrown.
HttpResult http_post_json(const std::string& url, const std::string& body,
                          const std::map<std::string, std::string>& headers, int timeout_seconds);

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/', may be "/"
};
// Throws Error(kInvalidArgument) for anything but http:// or https:// URLs.
ParsedUrl parse_url(const std::string& url);

}  // namespace roomgraph
