#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

namespace iotc {

// A forked+exec'd child. The destructor sends SIGTERM, then SIGKILL after a
// grace period, and reaps the child.
class ChildProcess {
 public:
  ChildProcess() = default;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ~ChildProcess();

  // argv[0] is the executable path. When output_path is non-empty the child's
  // stdout and stderr are appended to that file; otherwise they are discarded.
  static ChildProcess spawn(const std::vector<std::string>& argv,
                            const std::string& output_path = {});

  pid_t pid() const { return pid_; }
  bool valid() const { return pid_ > 0; }

  // Non-blocking: returns the raw wait status once the child has exited.
  std::optional<int> poll();
  int wait();
  void signal(int sig);
  // SIGTERM, wait up to grace, then SIGKILL.
  void stop(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));
  // Forget the child without killing it.
  pid_t release();

 private:
  pid_t pid_ = -1;
  std::optional<int> status_;
};

// Best-effort CPU affinity for the calling process.
bool pin_to_core(unsigned core);
unsigned available_cores();

}  // namespace iotc
