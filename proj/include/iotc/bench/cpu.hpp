#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <sys/types.h>

namespace iotc::bench {

struct CpuSample {
  pid_t pid = 0;
  std::int64_t t_ms = 0;       // since the sampler started
  double percent = 0;          // of one core
  bool vanished = false;       // tombstone: the process is gone, series ends
  friend bool operator==(const CpuSample&, const CpuSample&) = default;
};

// utime + stime of a process in seconds, from /proc/<pid>/stat.
std::optional<double> process_cpu_seconds(pid_t pid);

// Samples per-process CPU time on its own thread.
class CpuSampler {
 public:
  CpuSampler(std::vector<pid_t> pids, std::chrono::milliseconds interval);
  ~CpuSampler();
  CpuSampler(const CpuSampler&) = delete;
  CpuSampler& operator=(const CpuSampler&) = delete;

  void start();
  std::vector<CpuSample> stop();

 private:
  void run();

  std::vector<pid_t> pids_;
  std::chrono::milliseconds interval_;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::vector<CpuSample> series_;
};

// Mean of the non-tombstone samples, 0 if there are none.
double mean_cpu(const std::vector<CpuSample>& series);

}  // namespace iotc::bench
