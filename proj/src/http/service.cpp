#include "iotc/http/service.hpp"

#include <cstdio>

#include "iotc/slotstore/crc16.hpp"

namespace iotc::http {

namespace {

std::string build_bench_page() {
  static constexpr std::string_view kAlphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  const std::size_t trailer = 11;  // "crc16 XXXX\n"
  std::string page;
  std::size_t line = 0;
  while (page.size() < kBenchPageSize - trailer) {
    std::size_t room = kBenchPageSize - trailer - page.size();
    std::size_t len = std::min<std::size_t>(63, room - 1);
    for (std::size_t i = 0; i < len; ++i) page.push_back(kAlphabet[(line + i) % kAlphabet.size()]);
    page.push_back('\n');
    ++line;
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "crc16 %04x\n", slotstore::crc16(page));
  page += buf;
  return page;
}

HttpResponse method_not_allowed(std::string allow) {
  HttpResponse r = make_response(405, "method not allowed\n");
  r.headers.emplace_back("Allow", std::move(allow));
  return r;
}

}  // namespace

const std::string& bench_page() {
  static const std::string page = build_bench_page();
  return page;
}

bool verify_bench_page(std::string_view body) {
  if (body.size() != kBenchPageSize) return false;
  std::string_view trailer = body.substr(kBenchPageSize - 11);
  if (trailer.substr(0, 6) != "crc16 " || trailer.back() != '\n') return false;
  char buf[8];
  std::snprintf(buf, sizeof buf, "%04x", slotstore::crc16(body.substr(0, kBenchPageSize - 11)));
  return trailer.substr(6, 4) == buf;
}

HttpResponse handle_request(const HttpRequest& req, ResourceStore& store, const ServiceOptions& opts) {
  const bool builtin = req.path == kBenchPagePath || req.path == opts.health_path;
  if (builtin) {
    if (req.method != "GET") return method_not_allowed("GET");
    if (req.path == opts.health_path) return make_response(200, "ok\n");
    return make_response(200, bench_page(), "text/plain");
  }
  if (req.method == "GET") {
    auto r = store.get(req.path);
    if (!r) return make_response(404, "not found\n");
    return make_response(200, std::move(r->body), std::move(r->content_type));
  }
  if (req.method == "POST") {
    Resource r;
    r.body = req.body;
    if (auto ct = req.header("Content-Type")) r.content_type = std::string(*ct);
    bool created = store.put(req.path, std::move(r));
    return make_response(created ? 201 : 200, created ? "created\n" : "replaced\n");
  }
  if (req.method == "DELETE") {
    if (!store.remove(req.path)) return make_response(404, "not found\n");
    return make_response(204);
  }
  return method_not_allowed("GET, POST, DELETE");
}

}  // namespace iotc::http
