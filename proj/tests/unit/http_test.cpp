#include "iotc/http/parser.hpp"
#include "iotc/http/service.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "crc16_oracle.hpp"

namespace iotc::http {
namespace {

HttpRequest parse_one(std::string_view wire) {
  RequestParser p;
  p.feed(wire);
  auto r = p.next();
  if (!r) throw std::runtime_error("incomplete");
  return *r;
}

int parse_status(std::string_view wire) {
  try {
    parse_one(wire);
  } catch (const ParseError& e) {
    return e.status();
  }
  return 0;
}

HttpRequest req(std::string method, std::string path, std::string body = {}) {
  HttpRequest r;
  r.method = std::move(method);
  r.target = path;
  r.path = *normalize_path(path);
  r.body = std::move(body);
  return r;
}

TEST(RequestParser, ParsesHeadersAndBody) {
  HttpRequest r = parse_one(
      "POST /a//b/./c?x=1 HTTP/1.1\r\nHost: h\r\nContent-Length: 5\r\nX-Two:  spaced \r\n\r\nhello");
  EXPECT_EQ(r.method, "POST");
  EXPECT_EQ(r.target, "/a//b/./c?x=1");
  EXPECT_EQ(r.path, "/a/b/c");
  EXPECT_EQ(r.body, "hello");
  EXPECT_EQ(r.header("x-two"), "spaced");
  EXPECT_TRUE(r.keep_alive());
}

TEST(RequestParser, KeepAliveDefaults) {
  EXPECT_TRUE(parse_one("GET / HTTP/1.1\r\n\r\n").keep_alive());
  EXPECT_FALSE(parse_one("GET / HTTP/1.1\r\nConnection: close\r\n\r\n").keep_alive());
  EXPECT_FALSE(parse_one("GET / HTTP/1.0\r\n\r\n").keep_alive());
  EXPECT_TRUE(parse_one("GET / HTTP/1.0\r\nConnection: Keep-Alive\r\n\r\n").keep_alive());
}

TEST(RequestParser, ByteAtATimeAndPipelined) {
  std::string wire =
      "POST /x HTTP/1.1\r\nContent-Length: 3\r\n\r\nabcGET /x HTTP/1.1\r\n\r\nDELETE /x HTTP/1.1\r\n\r\n";
  RequestParser p;
  std::vector<HttpRequest> got;
  for (char c : wire) {
    p.feed(&c, 1);
    while (auto r = p.next()) got.push_back(*r);
  }
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].body, "abc");
  EXPECT_EQ(got[1].method, "GET");
  EXPECT_EQ(got[2].method, "DELETE");
}

TEST(RequestParser, ErrorStatuses) {
  EXPECT_EQ(parse_status("GARBAGE\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("GET /a HTTP/1.1 extra\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("GET a HTTP/1.1\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("GET /../etc HTTP/1.1\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("GET / HTTP/2.0\r\n\r\n"), 505);
  EXPECT_EQ(parse_status("GET / HTTP/1.1\r\nbad header\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("GET / HTTP/1.1\r\n folded: x\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("POST / HTTP/1.1\r\n\r\n"), 411);
  EXPECT_EQ(parse_status("POST / HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n"), 411);
  EXPECT_EQ(parse_status("POST / HTTP/1.1\r\nContent-Length: x\r\n\r\n"), 400);
  EXPECT_EQ(parse_status("POST / HTTP/1.1\r\nContent-Length: 1\r\nContent-Length: 2\r\n\r\nab"), 400);
  EXPECT_EQ(parse_status("POST / HTTP/1.1\r\nContent-Length: 999999999\r\n\r\n"), 413);
  EXPECT_EQ(parse_status("GET / HTTP/1.1\r\nX: " + std::string(20000, 'a') + "\r\n\r\n"), 431);
}

TEST(NormalizePath, Cases) {
  EXPECT_EQ(normalize_path("/"), "/");
  EXPECT_EQ(normalize_path("//a///b/"), "/a/b");
  EXPECT_EQ(normalize_path("/a/./b"), "/a/b");
  EXPECT_EQ(normalize_path("/a?q=/../"), "/a");
  EXPECT_FALSE(normalize_path("/a/../b"));
  EXPECT_FALSE(normalize_path("relative"));
  EXPECT_FALSE(normalize_path(""));
}

TEST(Response, SerializeAndParseBack) {
  HttpResponse r = make_response(201, "created\n");
  std::string wire = r.serialize();
  EXPECT_EQ(wire, "HTTP/1.1 201 Created\r\nContent-Type: text/plain\r\nContent-Length: 8\r\n\r\ncreated\n");
  ResponseParser p;
  p.feed(wire);
  auto back = p.next();
  ASSERT_TRUE(back);
  EXPECT_EQ(back->status, 201);
  EXPECT_EQ(back->body, "created\n");

  HttpResponse none = make_response(204);
  EXPECT_EQ(none.serialize(), "HTTP/1.1 204 No Content\r\n\r\n");
}

TEST(ResponseParser, CloseDelimitedBody) {
  ResponseParser p;
  p.feed("HTTP/1.1 200 OK\r\n\r\npart1");
  EXPECT_FALSE(p.next());
  p.feed("part2");
  auto r = p.finish();
  ASSERT_TRUE(r);
  EXPECT_EQ(r->body, "part1part2");
}

TEST(BenchPage, ExactSizeAndEmbeddedChecksum) {
  const std::string& page = bench_page();
  ASSERT_EQ(page.size(), 1024u);
  EXPECT_TRUE(verify_bench_page(page));
  // The checksum line is checked with the independent bitwise CRC.
  char expect[16];
  std::snprintf(expect, sizeof expect, "crc16 %04x\n", oracle::crc16_bitwise(std::string_view(page).substr(0, 1013)));
  EXPECT_EQ(page.substr(1013), expect);
  std::string tampered = page;
  tampered[100] ^= 1;
  EXPECT_FALSE(verify_bench_page(tampered));
  for (char c : page) EXPECT_TRUE(c == '\n' || std::isprint(static_cast<unsigned char>(c)));
}

TEST(Service, Examples) {
  MemoryStore store;
  auto page = handle_request(req("GET", "/bench/page"), store);
  EXPECT_EQ(page.status, 200);
  EXPECT_EQ(page.body.size(), 1024u);
  EXPECT_EQ(handle_request(req("POST", "/r", "x"), store).status, 201);
  auto got = handle_request(req("GET", "/r"), store);
  EXPECT_EQ(got.status, 200);
  EXPECT_EQ(got.body, "x");
  EXPECT_EQ(handle_request(req("POST", "/r", "y"), store).status, 200);
  EXPECT_EQ(handle_request(req("DELETE", "/missing"), store).status, 404);
  EXPECT_EQ(handle_request(req("PUT", "/r", "z"), store).status, 405);
  EXPECT_EQ(handle_request(req("POST", "/bench/page", "z"), store).status, 405);
  EXPECT_EQ(handle_request(req("GET", "/health"), store).status, 200);
}

TEST(Service, MethodAlgebraOnRandomPathsAndBodies) {
  std::mt19937_64 rng(31);
  MemoryStore store;
  std::map<std::string, std::string> oracle;
  for (int i = 0; i < 1000; ++i) {
    std::string path = "/r/" + std::to_string(rng() % 300) + "/" + std::to_string(rng() % 3);
    std::string body(rng() % 512, '\0');
    for (auto& c : body) c = static_cast<char>(rng() & 0xFF);
    bool existed = oracle.count(path) > 0;
    EXPECT_EQ(handle_request(req("POST", path, body), store).status, existed ? 200 : 201);
    oracle[path] = body;
    auto g = handle_request(req("GET", path), store);
    EXPECT_EQ(g.status, 200);
    EXPECT_EQ(g.body, body);
    if (rng() % 2) {
      EXPECT_EQ(handle_request(req("DELETE", path), store).status, 204);
      EXPECT_EQ(handle_request(req("GET", path), store).status, 404);
      EXPECT_EQ(handle_request(req("DELETE", path), store).status, 404);
      oracle.erase(path);
    }
  }
  EXPECT_EQ(store.size(), oracle.size());
}

}  // namespace
}  // namespace iotc::http
