#include "iotc/bench/cpu.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace iotc::bench {

std::optional<double> process_cpu_seconds(pid_t pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/stat");
  std::string line;
  if (!in || !std::getline(in, line)) return std::nullopt;
  // comm may contain spaces and parentheses; fields resume after the last ')'.
  auto close = line.rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream rest(line.substr(close + 2));
  std::string state;
  rest >> state;
  if (state == "Z" || state == "X") return std::nullopt;
  // fields 4..13 precede utime (14) and stime (15)
  std::string skip;
  for (int i = 4; i <= 13; ++i) rest >> skip;
  unsigned long long utime = 0, stime = 0;
  if (!(rest >> utime >> stime)) return std::nullopt;
  static const long ticks = ::sysconf(_SC_CLK_TCK);
  return static_cast<double>(utime + stime) / static_cast<double>(ticks);
}

CpuSampler::CpuSampler(std::vector<pid_t> pids, std::chrono::milliseconds interval)
    : pids_(std::move(pids)), interval_(interval) {}

CpuSampler::~CpuSampler() { stop(); }

void CpuSampler::start() {
  if (thread_.joinable() || pids_.empty()) return;
  thread_ = std::thread([this] { run(); });
}

std::vector<CpuSample> CpuSampler::stop() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mu_);
  return series_;
}

void CpuSampler::run() {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  struct Track {
    pid_t pid;
    double cpu;
    clock::time_point at;
    bool done;
  };
  std::vector<Track> tracks;
  for (pid_t p : pids_) {
    auto c = process_cpu_seconds(p);
    tracks.push_back({p, c.value_or(0), clock::now(), !c});
    if (!c) {
      std::lock_guard lock(mu_);
      series_.push_back({p, 0, 0, true});
    }
  }
  auto next = t0 + interval_;
  std::unique_lock lock(mu_);
  while (!cv_.wait_until(lock, next, [this] { return stop_; })) {
    next += interval_;
    lock.unlock();
    std::vector<CpuSample> batch;
    for (auto& t : tracks) {
      if (t.done) continue;
      auto now = clock::now();
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - t0).count();
      auto c = process_cpu_seconds(t.pid);
      if (!c) {
        t.done = true;
        batch.push_back({t.pid, ms, 0, true});
        continue;
      }
      double wall = std::chrono::duration<double>(now - t.at).count();
      double pct = wall > 0 ? (*c - t.cpu) / wall * 100.0 : 0;
      batch.push_back({t.pid, ms, pct, false});
      t.cpu = *c;
      t.at = now;
    }
    lock.lock();
    series_.insert(series_.end(), batch.begin(), batch.end());
  }
}

double mean_cpu(const std::vector<CpuSample>& series) {
  double sum = 0;
  int n = 0;
  for (const auto& s : series) {
    if (s.vanished) continue;
    sum += s.percent;
    ++n;
  }
  return n ? sum / n : 0;
}

}  // namespace iotc::bench
