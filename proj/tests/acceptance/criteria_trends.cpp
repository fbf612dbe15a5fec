#include <httplib.h>

#include <algorithm>
#include <numeric>

#include "iotc/bench/cpu.hpp"
#include "iotc/bench/load.hpp"
#include "iotc/bench/report.hpp"
#include "processes.hpp"

namespace iotc::acceptance {

namespace {

// Ranks with ties given their average position.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = (static_cast<double>(i + j) / 2.0) + 1;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = ranks(x), ry = ranks(y);
  double n = static_cast<double>(x.size());
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0;
}

// Direct children of a process, from /proc.
std::vector<pid_t> children_of(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/task/" + std::to_string(pid) + "/children");
  std::vector<pid_t> out;
  pid_t p;
  while (in >> p) out.push_back(p);
  return out;
}

bench::MetricsReport measured_run(bench::BenchConfig cfg, const std::vector<pid_t>& pids,
                                  const std::filesystem::path& out) {
  cfg.cpu_pids = pids;
  bench::CpuSampler sampler(pids, std::chrono::milliseconds(cfg.cpu_interval_ms));
  sampler.start();
  auto r = bench::run_load(cfg);
  r.cpu = sampler.stop();
  bench::emit_report(r, out);
  return r;
}

void plot(const std::filesystem::path& dir) {
  std::string cmd = "MPLBACKEND=Agg python3 " + (dir / bench::kPlotScript).string() + " > /dev/null 2>&1";
  if (std::system(cmd.c_str()) != 0) std::cerr << "plot script failed in " << dir << "\n";
}

// Slot-store bus, broker instances behind the TCP balancer.
struct MqttStack {
  MqttStack(int instances, const std::filesystem::path& dir)
      : store(plan_manifest({{"n1", std::nullopt}, {"n2", std::nullopt}, {"n3", std::nullopt}},
                            slotstore::Replication::Async, dir, false),
              dir) {
    if (!store.wait_meshed()) throw std::runtime_error("bus cluster did not mesh");
    std::uint16_t base = testing::free_port_range(instances);
    broker = spawn("broker",
                   {"--listen", ":" + std::to_string(base), "--instances", std::to_string(instances), "--bus",
                    store.manifest_path().string(), "--no-pin"},
                   dir / "broker.out");
    for (int i = 0; i < instances; ++i) {
      if (!wait_port(static_cast<std::uint16_t>(base + i))) throw std::runtime_error("broker did not start");
    }
    lb_port = testing::free_port();
    admin_port = testing::free_port();
    std::vector<std::string> args{"--mode", "tcp", "--listen", ":" + std::to_string(lb_port), "--admin",
                                  ":" + std::to_string(admin_port)};
    for (int i = 0; i < instances; ++i) {
      args.push_back("--backend");
      args.push_back("127.0.0.1:" + std::to_string(base + i));
    }
    balancer = spawn("balancer", args, dir / "balancer.out");
    if (!wait_port(lb_port) || !wait_port(admin_port)) throw std::runtime_error("balancer did not start");
    // let the brokers attach to the bus
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
  }

  std::vector<pid_t> broker_pids() {
    auto pids = children_of(broker.pid());
    pids.insert(pids.begin(), broker.pid());
    return pids;
  }

  nlohmann::json balancer_stats() {
    httplib::Client cli("127.0.0.1", admin_port);
    auto res = cli.Get("/");
    if (!res) throw std::runtime_error("balancer admin unreachable");
    return nlohmann::json::parse(res->body);
  }

  StoreProcesses store;
  ChildProcess broker;
  ChildProcess balancer;
  std::uint16_t lb_port = 0;
  std::uint16_t admin_port = 0;
};

std::string conservation_note(const bench::MetricsReport& r) {
  return std::to_string(r.success) + "+" + std::to_string(r.failure) + "+" + std::to_string(r.in_flight_at_end) +
         "=" + std::to_string(r.issued);
}

}  // namespace

Checks criterion_http_trend() {
  Checks c;
  auto dir = output_dir("c9");
  auto port = testing::free_port();
  auto httpd = spawn("httpd", {"--listen", ":" + std::to_string(port)}, dir / "httpd.out");
  c.expect(wait_port(port), "httpd listening");

  const std::vector<int> counts{50, 100, 200, 400, 800, 1600};
  std::vector<double> xs, latency, throughput;
  for (int n : counts) {
    auto cfg = bench::BenchConfig::defaults(bench::Mode::Http);
    cfg.target = {"127.0.0.1", port};
    cfg.clients = n;
    cfg.duration_s = 20;
    cfg.ramp_s = 4;
    cfg.label = "1 process";
    auto r = measured_run(cfg, {httpd.pid()}, dir);
    xs.push_back(n);
    latency.push_back(r.mean_latency_us());
    throughput.push_back(r.throughput());
    c.expect(r.conserved(), "conservation at " + std::to_string(n));
    c.expect(r.max_outstanding <= static_cast<std::uint64_t>(n), "closed loop at " + std::to_string(n));
    c.note(std::to_string(n) + " clients: " + fmt(r.mean_latency_us() / 1000, 3) + " ms, " +
           fmt(r.throughput(), 0) + "/s, " + std::to_string(r.failure) + " failures, cpu " +
           fmt(bench::mean_cpu(r.cpu), 0) + "%");
  }
  double rho = spearman(xs, latency);
  double t1 = throughput[throughput.size() - 2], t2 = throughput.back();
  double diff = std::abs(t1 - t2) / std::max(t1, t2);
  c.expect(rho >= 0.9, "Spearman rho " + fmt(rho, 3) + " < 0.9");
  c.expect(diff < 0.15, "top two throughputs differ by " + fmt(diff * 100, 1) + "%");
  c.note("Spearman rho " + fmt(rho, 3) + ", top-two throughput difference " + fmt(diff * 100, 1) + "%");
  plot(dir);
  return c;
}

Checks criterion_mqtt_scaling() {
  Checks c;
  auto dir = output_dir("c10");
  const std::vector<int> counts{100, 200, 400, 800};
  std::map<int, std::vector<bench::MetricsReport>> runs;
  for (int instances : {1, 2}) {
    auto sub = dir / ("instances-" + std::to_string(instances));
    std::filesystem::create_directories(sub);
    MqttStack stack(instances, sub);
    for (int n : counts) {
      auto cfg = bench::BenchConfig::defaults(bench::Mode::Mqtt);
      cfg.target = {"127.0.0.1", stack.lb_port};
      cfg.clients = n;
      cfg.duration_s = 20;
      cfg.ramp_s = 4;
      cfg.interval_s = 1;
      cfg.label = std::to_string(instances) + " instance" + (instances > 1 ? "s" : "");
      auto r = measured_run(cfg, stack.broker_pids(), dir);
      c.expect(r.conserved(), "conservation at " + cfg.label + "/" + std::to_string(n));
      c.note(cfg.label + ", " + std::to_string(n) + " clients: " + fmt(r.throughput(), 0) + "/s of " +
             std::to_string(n) + "/s offered, " + fmt(r.mean_latency_us() / 1000, 3) + " ms, " +
             std::to_string(r.failure) + " failures");
      runs[instances].push_back(std::move(r));
    }
  }
  // Saturated single-instance throughput: the best it reached in the sweep.
  double s1 = 0;
  for (const auto& r : runs[1]) s1 = std::max(s1, r.throughput());
  // Two instances, up to the latency knee: stop at the first run whose mean
  // latency exceeds 3x the lightest run's, or that has failures.
  double t2 = 0;
  double base_latency = runs[2].front().mean_latency_us();
  std::size_t knee = counts.size();
  for (std::size_t i = 0; i < runs[2].size(); ++i) {
    const auto& r = runs[2][i];
    if (i > 0 && (r.mean_latency_us() > 3 * base_latency || r.failure > 0)) {
      knee = i;
      break;
    }
    t2 = std::max(t2, r.throughput());
  }
  double ratio = s1 > 0 ? t2 / s1 : 0;
  c.expect(ratio >= 1.5, "2-instance throughput " + fmt(t2, 0) + "/s is " + fmt(ratio, 2) +
                             "x the single-instance " + fmt(s1, 0) + "/s (need 1.5x)");
  c.note("knee for 2 instances: " + (knee < counts.size() ? std::to_string(counts[knee]) + " clients" : "none") +
         "; single instance delivered " + fmt(s1 / counts.back() * 100, 0) + "% of its top offered load");
  plot(dir);
  return c;
}

Checks criterion_end_to_end() {
  Checks c;
  auto dir = output_dir("c11");
  MqttStack stack(2, dir);
  auto cfg = bench::BenchConfig::defaults(bench::Mode::Mqtt);
  cfg.target = {"127.0.0.1", stack.lb_port};
  cfg.clients = 500;
  cfg.duration_s = 60;
  cfg.interval_s = 1;
  cfg.qos = 1;
  cfg.label = "end to end";
  auto r = measured_run(cfg, stack.broker_pids(), dir);

  c.expect(r.conserved(), "conservation " + conservation_note(r));
  c.expect(r.failure == 0, std::to_string(r.failure) + " undelivered messages");
  c.expect(r.in_flight_at_end <= 500, "in flight at cutoff " + std::to_string(r.in_flight_at_end));
  c.expect(r.client_failures == 0, std::to_string(r.client_failures) + " client connect/subscribe failures");
  c.note("published " + std::to_string(r.issued) + ", delivered " + std::to_string(r.success) + ", in flight " +
         std::to_string(r.in_flight_at_end) + " (" + conservation_note(r) + ")");

  auto stats = stack.balancer_stats();
  auto backends = stats["pools"]["default"];
  double total = 0;
  std::vector<double> selected;
  for (const auto& b : backends) {
    selected.push_back(b["selected"].get<double>());
    total += selected.back();
  }
  c.expect(selected.size() == 2, "two backends in the balancer");
  for (std::size_t i = 0; i < selected.size(); ++i) {
    double share = total > 0 ? selected[i] / total : 0;
    c.expect(share >= 0.3, "instance " + std::to_string(i) + " share " + fmt(share * 100, 1) + "%");
    c.note("instance " + std::to_string(i) + ": " + fmt(selected[i], 0) + " connections (" +
           fmt(share * 100, 1) + "%)");
  }
  c.note("mean latency " + fmt(r.mean_latency_us() / 1000, 3) + " ms, throughput " + fmt(r.throughput(), 0) + "/s");
  return c;
}

}  // namespace iotc::acceptance
