#include "iotc/http/message.hpp"

#include <cctype>

namespace iotc::http {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::optional<std::string_view> find_header(const Headers& h, std::string_view name) {
  for (const auto& [k, v] : h) {
    if (iequals(k, name)) return std::string_view(v);
  }
  return std::nullopt;
}

namespace {

bool has_token(std::string_view value, std::string_view token) {
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    if (comma == std::string_view::npos) comma = value.size();
    std::string_view item = value.substr(pos, comma - pos);
    while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) item.remove_prefix(1);
    while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) item.remove_suffix(1);
    if (iequals(item, token)) return true;
    pos = comma + 1;
  }
  return false;
}

}  // namespace

bool HttpRequest::keep_alive() const {
  auto conn = header("Connection");
  if (minor_version == 0) return conn && has_token(*conn, "keep-alive");
  return !(conn && has_token(*conn, "close"));
}

std::string HttpRequest::serialize() const {
  std::string out;
  out.reserve(128 + body.size());
  out.append(method).append(" ").append(target).append(minor_version == 0 ? " HTTP/1.0\r\n" : " HTTP/1.1\r\n");
  bool has_length = false;
  for (const auto& [k, v] : headers) {
    if (iequals(k, "Content-Length")) has_length = true;
    out.append(k).append(": ").append(v).append("\r\n");
  }
  if (!has_length && (!body.empty() || method == "POST")) {
    out.append("Content-Length: ").append(std::to_string(body.size())).append("\r\n");
  }
  out.append("\r\n").append(body);
  return out;
}

std::string_view reason_phrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 201: return "Created";
    case 204: return "No Content";
    case 400: return "Bad Request";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 408: return "Request Timeout";
    case 411: return "Length Required";
    case 413: return "Payload Too Large";
    case 431: return "Request Header Fields Too Large";
    case 500: return "Internal Server Error";
    case 502: return "Bad Gateway";
    case 503: return "Service Unavailable";
    case 504: return "Gateway Timeout";
    case 505: return "HTTP Version Not Supported";
    default: return "Unknown";
  }
}

std::string HttpResponse::serialize() const {
  std::string out;
  out.reserve(160 + body.size());
  out.append("HTTP/1.1 ").append(std::to_string(status)).append(" ").append(reason_phrase(status)).append("\r\n");
  for (const auto& [k, v] : headers) {
    if (iequals(k, "Content-Length") || iequals(k, "Connection")) continue;
    out.append(k).append(": ").append(v).append("\r\n");
  }
  // 1xx and 204 must not carry a length; everything else always does.
  if (status >= 200 && status != 204) {
    out.append("Content-Length: ").append(std::to_string(body.size())).append("\r\n");
  }
  if (close) out.append("Connection: close\r\n");
  out.append("\r\n").append(body);
  return out;
}

std::optional<std::string> normalize_path(std::string_view target) {
  std::size_t q = target.find_first_of("?#");
  if (q != std::string_view::npos) target = target.substr(0, q);
  if (target.empty() || target.front() != '/') return std::nullopt;
  std::string out;
  std::size_t pos = 0;
  while (pos < target.size()) {
    std::size_t next = target.find('/', pos + 1);
    if (next == std::string_view::npos) next = target.size();
    std::string_view seg = target.substr(pos + 1, next - pos - 1);
    if (seg == "..") return std::nullopt;
    if (!seg.empty() && seg != ".") out.append("/").append(seg);
    pos = next;
  }
  if (out.empty()) out = "/";
  return out;
}

HttpResponse make_response(int status, std::string body, std::string content_type) {
  HttpResponse r;
  r.status = status;
  r.body = std::move(body);
  if (status != 204) r.headers.emplace_back("Content-Type", std::move(content_type));
  return r;
}

}  // namespace iotc::http
