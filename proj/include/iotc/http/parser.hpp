#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "iotc/http/message.hpp"

namespace iotc::http {

// Malformed or unsupported message. `status` is the response the connection
// layer should send before closing.
class ParseError : public std::runtime_error {
 public:
  ParseError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ParserLimits {
  std::size_t max_head = 16 * 1024;
  std::size_t max_body = 8 * 1024 * 1024;
};

// Incremental HTTP/1.x request parser. Requests need Content-Length for a
// body; chunked requests are refused with 411.
class RequestParser {
 public:
  explicit RequestParser(ParserLimits limits = {}) : limits_(limits) {}
  void feed(const char* data, std::size_t n) { compact(); buf_.append(data, n); }
  void feed(std::string_view s) { feed(s.data(), s.size()); }
  std::optional<HttpRequest> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  void compact();
  ParserLimits limits_;
  std::string buf_;
  std::size_t pos_ = 0;
};

// Incremental HTTP/1.x response parser. Bodies are delimited by
// Content-Length, or by connection close when it is absent.
class ResponseParser {
 public:
  explicit ResponseParser(ParserLimits limits = {}) : limits_(limits) {}
  void feed(const char* data, std::size_t n) { compact(); buf_.append(data, n); }
  void feed(std::string_view s) { feed(s.data(), s.size()); }
  // Set when the response being parsed answers a HEAD request.
  std::optional<HttpResponse> next(bool head_request = false);
  // Call at EOF: completes a close-delimited body, if one is pending.
  std::optional<HttpResponse> finish();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  void compact();
  ParserLimits limits_;
  std::string buf_;
  std::size_t pos_ = 0;
  std::optional<HttpResponse> until_close_;
};

}  // namespace iotc::http
