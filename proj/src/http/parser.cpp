#include "iotc/http/parser.hpp"

#include <charconv>

namespace iotc::http {

namespace {

bool is_tchar(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  switch (c) {
    case '!': case '#': case '$': case '%': case '&': case '\'': case '*': case '+':
    case '-': case '.': case '^': case '_': case '`': case '|': case '~':
      return true;
    default:
      return false;
  }
}

bool is_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_tchar(c)) return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Parses the header block (lines after the start line). Throws with
// `bad_status` on malformed input.
Headers parse_headers(std::string_view block, int bad_status) {
  Headers out;
  std::size_t pos = 0;
  while (pos < block.size()) {
    std::size_t eol = block.find("\r\n", pos);
    if (eol == std::string_view::npos) eol = block.size();
    std::string_view line = block.substr(pos, eol - pos);
    pos = eol + 2;
    if (line.empty()) continue;
    if (line.front() == ' ' || line.front() == '\t') throw ParseError(bad_status, "folded header");
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(bad_status, "header without colon");
    std::string_view name = line.substr(0, colon);
    if (!is_token(name)) throw ParseError(bad_status, "bad header name");
    std::string_view value = trim(line.substr(colon + 1));
    for (char c : value) {
      if ((c < 0x20 && c != '\t') || c == 0x7F) throw ParseError(bad_status, "control byte in header");
    }
    out.emplace_back(std::string(name), std::string(value));
  }
  return out;
}

// Content-Length value if present. Conflicting or non-numeric values throw.
std::optional<std::size_t> content_length(const Headers& h, int bad_status) {
  std::optional<std::size_t> len;
  for (const auto& [k, v] : h) {
    if (!iequals(k, "Content-Length")) continue;
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
      throw ParseError(bad_status, "bad Content-Length");
    }
    if (len && *len != n) throw ParseError(bad_status, "conflicting Content-Length");
    len = n;
  }
  return len;
}

int parse_version(std::string_view v, int bad_status) {
  if (v.size() != 8 || v.substr(0, 5) != "HTTP/" || v[6] != '.' || !std::isdigit((unsigned char)v[5]) ||
      !std::isdigit((unsigned char)v[7])) {
    throw ParseError(bad_status, "bad HTTP version");
  }
  if (v[5] != '1') throw ParseError(505, "unsupported HTTP version");
  return v[7] - '0';
}

}  // namespace

void RequestParser::compact() {
  if (pos_ == 0) return;
  if (pos_ == buf_.size()) {
    buf_.clear();
  } else {
    buf_.erase(0, pos_);
  }
  pos_ = 0;
}

std::optional<HttpRequest> RequestParser::next() {
  std::string_view data(buf_);
  data.remove_prefix(pos_);
  // Tolerate blank lines between requests.
  std::size_t skip = 0;
  while (data.substr(skip, 2) == "\r\n") skip += 2;
  data.remove_prefix(skip);
  std::size_t head_end = data.find("\r\n\r\n");
  if (head_end == std::string_view::npos) {
    if (data.size() > limits_.max_head) throw ParseError(431, "request head too large");
    return std::nullopt;
  }
  if (head_end + 4 > limits_.max_head) throw ParseError(431, "request head too large");
  std::string_view head = data.substr(0, head_end);
  std::size_t eol = head.find("\r\n");
  std::string_view start = head.substr(0, eol);
  std::string_view rest = eol == std::string_view::npos ? std::string_view{} : head.substr(eol + 2);

  std::size_t sp1 = start.find(' ');
  std::size_t sp2 = sp1 == std::string_view::npos ? sp1 : start.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos || start.find(' ', sp2 + 1) != std::string_view::npos) {
    throw ParseError(400, "bad request line");
  }
  HttpRequest req;
  std::string_view method = start.substr(0, sp1);
  std::string_view target = start.substr(sp1 + 1, sp2 - sp1 - 1);
  if (!is_token(method) || target.empty()) throw ParseError(400, "bad request line");
  req.minor_version = parse_version(start.substr(sp2 + 1), 400);
  req.method = std::string(method);
  req.target = std::string(target);
  auto path = normalize_path(target);
  if (!path) throw ParseError(400, "bad request target");
  req.path = std::move(*path);
  req.headers = parse_headers(rest, 400);

  if (req.header("Transfer-Encoding")) throw ParseError(411, "chunked request bodies are not supported");
  auto len = content_length(req.headers, 400);
  if (!len && req.method == "POST") throw ParseError(411, "POST without Content-Length");
  std::size_t body_len = len.value_or(0);
  if (body_len > limits_.max_body) throw ParseError(413, "request body too large");
  const std::size_t total = head_end + 4 + body_len;
  if (data.size() < total) return std::nullopt;
  req.body = std::string(data.substr(head_end + 4, body_len));
  pos_ += skip + total;
  return req;
}

void ResponseParser::compact() {
  if (pos_ == 0) return;
  buf_.erase(0, pos_);
  pos_ = 0;
}

std::optional<HttpResponse> ResponseParser::next(bool head_request) {
  if (until_close_) return std::nullopt;
  std::string_view data(buf_);
  data.remove_prefix(pos_);
  std::size_t head_end = data.find("\r\n\r\n");
  if (head_end == std::string_view::npos) {
    if (data.size() > limits_.max_head) throw ParseError(502, "response head too large");
    return std::nullopt;
  }
  std::string_view head = data.substr(0, head_end);
  std::size_t eol = head.find("\r\n");
  std::string_view start = head.substr(0, eol);
  std::string_view rest = eol == std::string_view::npos ? std::string_view{} : head.substr(eol + 2);
  if (start.size() < 12 || start[8] != ' ') throw ParseError(502, "bad status line");
  parse_version(start.substr(0, 8), 502);
  int status = 0;
  auto [p, ec] = std::from_chars(start.data() + 9, start.data() + 12, status);
  if (ec != std::errc() || p != start.data() + 12 || status < 100 || status > 999 ||
      (start.size() > 12 && start[12] != ' ')) {
    throw ParseError(502, "bad status code");
  }
  HttpResponse resp;
  resp.status = status;
  resp.headers = parse_headers(rest, 502);
  if (auto conn = resp.header("Connection"); conn && iequals(*conn, "close")) resp.close = true;

  std::size_t body_start = head_end + 4;
  if (head_request || status < 200 || status == 204 || status == 304) {
    pos_ += body_start;
    return resp;
  }
  if (resp.header("Transfer-Encoding")) throw ParseError(502, "chunked responses are not supported");
  auto len = content_length(resp.headers, 502);
  if (!len) {
    pos_ += body_start;
    resp.close = true;
    until_close_ = std::move(resp);
    return std::nullopt;
  }
  if (*len > limits_.max_body) throw ParseError(502, "response body too large");
  if (data.size() < body_start + *len) return std::nullopt;
  resp.body = std::string(data.substr(body_start, *len));
  pos_ += body_start + *len;
  return resp;
}

std::optional<HttpResponse> ResponseParser::finish() {
  if (!until_close_) return std::nullopt;
  HttpResponse r = std::move(*until_close_);
  until_close_.reset();
  r.body = buf_.substr(pos_);
  pos_ = buf_.size();
  return r;
}

}  // namespace iotc::http
