#include <CLI11.hpp>

#include <iostream>

#include "iotc/common/duration.hpp"
#include "iotc/http/server.hpp"
#include "iotc/http/store.hpp"
#include "iotc/slotstore/manifest.hpp"
#include "tool_common.hpp"

using namespace iotc;

int main(int argc, char** argv) {
  CLI::App app{"HTTP resource service"};
  std::string listen = ":8080", store_spec = "memory", health_path = "/health", idle = "30s";
  app.add_option("--listen", listen, "address to listen on")->capture_default_str();
  app.add_option("--store", store_spec, "memory | slot:<manifest.toml>")->capture_default_str();
  app.add_option("--health-path", health_path, "health check path")->capture_default_str();
  app.add_option("--idle-timeout", idle, "close idle keep-alive connections after")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<http::ResourceStore> store;
    if (store_spec == "memory") {
      store = std::make_unique<http::MemoryStore>();
    } else if (store_spec.rfind("slot:", 0) == 0) {
      auto manifest = slotstore::ClusterManifest::load(store_spec.substr(5));
      std::vector<HostPort> seeds;
      for (const auto& n : manifest.nodes) seeds.push_back(n.address);
      store = std::make_unique<http::SlotStore>(seeds);
    } else {
      throw std::invalid_argument("--store must be memory or slot:<manifest>");
    }
    http::ServerOptions opts;
    opts.service.health_path = health_path;
    opts.idle_timeout = parse_duration(idle);
    asio::io_context io;
    http::HttpServer server(io, tools::to_endpoint(parse_host_port(listen)), *store, opts);
    server.start();
    std::cerr << "httpd listening on " << server.local_endpoint() << "\n";
    tools::run_until_signal(io, [&] { server.stop(); });
  } catch (const std::exception& e) {
    std::cerr << "httpd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
