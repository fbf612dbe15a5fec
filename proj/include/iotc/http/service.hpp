#pragma once

#include <string>

#include "iotc/http/message.hpp"
#include "iotc/http/store.hpp"

namespace iotc::http {

inline constexpr const char* kBenchPagePath = "/bench/page";
inline constexpr std::size_t kBenchPageSize = 1024;

// The fixed benchmark body: printable filler lines followed by a line
// "crc16 XXXX" carrying the CRC-16 of everything before it. Exactly 1024 bytes.
const std::string& bench_page();
// True if `body` is a well-formed bench page (size and embedded checksum).
bool verify_bench_page(std::string_view body);

struct ServiceOptions {
  std::string health_path = "/health";
};

// GET/POST/DELETE over path-keyed resources. /bench/page and the health path
// are read-only built-ins.
HttpResponse handle_request(const HttpRequest& req, ResourceStore& store, const ServiceOptions& opts = {});

}  // namespace iotc::http
