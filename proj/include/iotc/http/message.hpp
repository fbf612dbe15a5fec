#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iotc::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

bool iequals(std::string_view a, std::string_view b);
std::optional<std::string_view> find_header(const Headers& h, std::string_view name);

struct HttpRequest {
  std::string method;
  std::string target;  // as sent
  std::string path;    // normalized target without query
  int minor_version = 1;
  Headers headers;
  std::string body;

  std::optional<std::string_view> header(std::string_view name) const { return find_header(headers, name); }
  bool keep_alive() const;
  std::string serialize() const;
};

struct HttpResponse {
  int status = 200;
  Headers headers;
  std::string body;
  bool close = false;  // send "Connection: close" and close afterwards

  std::optional<std::string_view> header(std::string_view name) const { return find_header(headers, name); }
  // Content-Length is always emitted except for 204.
  std::string serialize() const;
};

std::string_view reason_phrase(int status);

// Collapses duplicate slashes and "." segments and drops the query string.
// Returns nullopt for relative targets or any ".." segment.
std::optional<std::string> normalize_path(std::string_view target);

HttpResponse make_response(int status, std::string body = {},
                           std::string content_type = "text/plain");

}  // namespace iotc::http
