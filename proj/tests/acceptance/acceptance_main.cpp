#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "acceptance.hpp"

namespace iotc::acceptance {

std::filesystem::path bin_dir() { return IOTC_BIN_DIR; }
std::filesystem::path script_dir() { return IOTC_SCRIPT_DIR; }

std::filesystem::path output_dir(const std::string& name) {
  auto p = std::filesystem::current_path() / "acceptance_out" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string fmt(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

namespace {

struct Criterion {
  int number;
  const char* name;
  double limit_s;
  Checks (*run)();
};

const Criterion kCriteria[] = {
    {1, "codec round-trip", 10, criterion_codec},
    {2, "interop smoke", 60, criterion_interop},
    {3, "QoS semantics", 30, criterion_qos},
    {4, "slot math", 20, criterion_slots},
    {5, "cluster transparency", 60, criterion_transparency},
    {6, "failover", 60, criterion_failover},
    {7, "balancer policies", 60, criterion_balancer},
    {8, "HTTP semantics", 30, criterion_http},
    {9, "HTTP trend", 600, criterion_http_trend},
    {10, "MQTT core scaling", 600, criterion_mqtt_scaling},
    {11, "end-to-end integration", 180, criterion_end_to_end},
};

bool run(const Criterion& c) {
  auto t0 = std::chrono::steady_clock::now();
  Checks checks;
  try {
    checks = c.run();
  } catch (const std::exception& e) {
    checks.expect(false, std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  checks.expect(secs < c.limit_s, "runtime " + fmt(secs, 1) + " s over the " + fmt(c.limit_s, 0) + " s limit");
  bool pass = checks.ok();
  std::cout << "criterion " << c.number << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << " ["
            << fmt(secs, 1) << " s] " << checks.summary() << std::endl;
  return pass;
}

}  // namespace
}  // namespace iotc::acceptance

int main(int argc, char** argv) {
  using namespace iotc::acceptance;
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--criterion", only, "run only these (1-11); default all");
  CLI11_PARSE(app, argc, argv);
  bool all = true;
  for (const auto& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    all = run(c) && all;
  }
  return all ? 0 : 1;
}
