#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "iotc/balancer/health.hpp"
#include "iotc/balancer/http_proxy.hpp"
#include "iotc/balancer/stats.hpp"
#include "iotc/balancer/tcp_proxy.hpp"
#include "iotc/common/duration.hpp"
#include "tool_common.hpp"

using namespace iotc;
using namespace iotc::balancer;

int main(int argc, char** argv) {
  CLI::App app{"HTTP / TCP load balancer"};
  std::string mode = "http", listen, admin, interval = "2s", health_path = "/health", events;
  std::vector<std::string> backends, rules;
  bool no_health = false;
  app.add_option("--mode", mode, "http (weighted round robin) or tcp (least connections)")
      ->check(CLI::IsMember({"http", "tcp"}))
      ->capture_default_str();
  app.add_option("--listen", listen, "address to listen on")->required();
  app.add_option("--backend", backends, "[pool/]host:port[:weight], repeatable")->required();
  app.add_option("--rule", rules, "<prefix>=<pool>, in priority order (http mode)");
  app.add_option("--check-interval", interval, "health check interval")->capture_default_str();
  app.add_option("--health-path", health_path, "path probed in http mode")->capture_default_str();
  app.add_flag("--no-health-check", no_health, "never probe; every backend stays healthy");
  app.add_option("--admin", admin, "extra address serving the JSON stats");
  app.add_option("--events", events, "JSON event log: a file, or - for stdout");
  CLI11_PARSE(app, argc, argv);

  try {
    std::map<std::string, std::vector<Backend>> grouped;
    std::vector<std::string> order;
    for (const auto& text : backends) {
      BackendSpec spec = parse_backend_spec(text);
      auto& list = grouped[spec.pool];
      if (list.empty()) order.push_back(spec.pool);
      Backend b;
      b.id = std::to_string(list.size());
      b.address = spec.address;
      b.weight = spec.weight;
      list.push_back(b);
    }
    std::map<std::string, std::unique_ptr<BackendPool>> pools;
    std::vector<BackendPool*> pool_list;
    std::vector<const BackendPool*> const_pools;
    for (const auto& name : order) {
      pools[name] = std::make_unique<BackendPool>(name, grouped[name]);
      pool_list.push_back(pools[name].get());
      const_pools.push_back(pools[name].get());
    }

    tools::EventSink sink(events);
    asio::io_context io;
    tcp::endpoint endpoint = tools::to_endpoint(parse_host_port(listen));
    std::unique_ptr<TcpProxy> tcp_proxy;
    std::unique_ptr<HttpProxy> http_proxy;
    std::function<nlohmann::json()> stats;

    if (mode == "tcp") {
      if (!rules.empty()) throw std::invalid_argument("--rule applies to http mode only");
      if (pools.size() != 1) throw std::invalid_argument("tcp mode takes a single pool");
      tcp_proxy = std::make_unique<TcpProxy>(io, endpoint, *pool_list.front(), TcpProxyOptions{}, sink.get());
      stats = [&] { return balancer_stats("tcp", const_pools, tcp_proxy->stats_json()); };
      tcp_proxy->start();
    } else {
      std::vector<RouteRule> route;
      if (rules.empty()) rules.push_back("/=" + order.front());
      for (const auto& text : rules) {
        auto [prefix, name] = parse_rule_spec(text);
        auto it = pools.find(name);
        if (it == pools.end()) throw std::invalid_argument("rule refers to unknown pool " + name);
        route.push_back({prefix, it->second.get()});
      }
      http_proxy = std::make_unique<HttpProxy>(io, endpoint, route, HttpProxyOptions{}, sink.get());
      stats = [&] { return balancer_stats("http", const_pools, http_proxy->stats_json()); };
      http_proxy->set_stats_source(stats);
      http_proxy->start();
    }

    std::unique_ptr<AdminServer> admin_server;
    if (!admin.empty()) {
      admin_server = std::make_unique<AdminServer>(io, tools::to_endpoint(parse_host_port(admin)), stats);
      admin_server->start();
    }
    std::unique_ptr<HealthChecker> health;
    if (!no_health) {
      HealthOptions hopts;
      hopts.kind = mode == "tcp" ? ProbeKind::Tcp : ProbeKind::Http;
      hopts.interval = parse_duration(interval);
      hopts.timeout = std::min(hopts.timeout, hopts.interval);
      hopts.path = health_path;
      health = std::make_unique<HealthChecker>(io, pool_list, hopts, sink.get());
      health->start();
    }
    std::cerr << "balancer (" << mode << ") listening on "
              << (tcp_proxy ? tcp_proxy->local_endpoint() : http_proxy->local_endpoint()) << "\n";
    tools::run_until_signal(io, [&] {
      if (tcp_proxy) tcp_proxy->stop();
      if (http_proxy) http_proxy->stop();
      if (admin_server) admin_server->stop();
      if (health) health->stop();
    });
  } catch (const std::exception& e) {
    std::cerr << "balancer: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
