#include <CLI11.hpp>

#include <iostream>

#include <sys/prctl.h>
#include <signal.h>
#include <unistd.h>

#include "iotc/broker/broker.hpp"
#include "iotc/broker/cluster.hpp"
#include "iotc/common/duration.hpp"
#include "iotc/slotstore/manifest.hpp"
#include "tool_common.hpp"

using namespace iotc;
using namespace iotc::broker;

int main(int argc, char** argv) {
  CLI::App app{"MQTT broker (master/slave cluster over the slot-store bus)"};
  std::string listen = ":1883", bus_manifest, role = "master", events, stats_every = "0", ack_timeout = "5s";
  int instances = 1, index = 0;
  unsigned keepalive_default = 60;
  bool no_pin = false;
  app.add_option("--listen", listen, "base address; instance i listens on port + i")->capture_default_str();
  app.add_option("--instances", instances, "broker processes, master included")->capture_default_str();
  app.add_option("--bus", bus_manifest, "slot-store cluster manifest (required for more than one instance)");
  app.add_option("--keepalive-default", keepalive_default, "seconds, for clients that send keepalive 0")
      ->capture_default_str();
  app.add_option("--ack-timeout", ack_timeout, "QoS retransmission timeout")->capture_default_str();
  app.add_option("--events", events, "JSON event log; instance i > 0 appends to <file>.<i>; - for stdout");
  app.add_option("--stats-interval", stats_every, "emit a stats event this often (0 = never)")->capture_default_str();
  app.add_flag("--no-pin", no_pin, "do not pin instances to cores");
  app.add_option("--role", role, "set by the master when it spawns slaves")
      ->check(CLI::IsMember({"master", "slave"}))
      ->group("");
  app.add_option("--index", index, "instance index (slaves)")->group("");
  CLI11_PARSE(app, argc, argv);

  try {
    ClusterConfig cfg{role == "master" ? Role::Master : Role::Slave, instances, index};
    cfg.validate();
    if (cfg.role == Role::Slave) {
      // Do not outlive the master.
      ::prctl(PR_SET_PDEATHSIG, SIGTERM);
      if (::getppid() == 1) return 1;
    }
    if (instances > 1 && bus_manifest.empty()) throw std::invalid_argument("--instances > 1 needs --bus");
    if (static_cast<unsigned>(instances) > available_cores()) {
      std::cerr << "broker: warning: " << instances << " instances on " << available_cores()
                << " core(s); instances will share cores\n";
    }

    HostPort base = parse_host_port(listen);
    std::string my_events = events;
    if (!events.empty() && events != "-" && index > 0) my_events += "." + std::to_string(index);
    tools::EventSink sink(my_events);
    if (!no_pin) pin_to_core(static_cast<unsigned>(index));

    asio::io_context io;
    std::unique_ptr<MessageBus> bus;
    if (bus_manifest.empty()) {
      bus = std::make_unique<LocalBus>(io.get_executor());
    } else {
      auto manifest = slotstore::ClusterManifest::load(bus_manifest);
      std::vector<HostPort> nodes;
      for (const auto& n : manifest.nodes) nodes.push_back(n.address);
      bus = std::make_unique<SlotBus>(io.get_executor(), nodes, static_cast<std::size_t>(index) % nodes.size());
    }

    BrokerOptions opts;
    opts.listen = tools::to_endpoint({base.host, static_cast<std::uint16_t>(base.port + index)});
    opts.keepalive_default = std::chrono::seconds(keepalive_default);
    opts.qos.ack_timeout = parse_duration(ack_timeout);
    opts.instance = index;
    Broker broker(io, opts, *bus, sink.get());
    broker.start();
    std::cerr << "broker " << index << "/" << instances << " listening on " << broker.local_endpoint() << "\n";

    std::unique_ptr<Supervisor> supervisor;
    if (cfg.role == Role::Master && instances > 1) {
      std::string exe = self_executable();
      auto argv_for = [=](int i) {
        std::vector<std::string> a{exe,         "--role", "slave", "--index", std::to_string(i),
                                   "--listen",  listen,   "--instances", std::to_string(instances),
                                   "--keepalive-default", std::to_string(keepalive_default),
                                   "--ack-timeout", ack_timeout, "--stats-interval", stats_every};
        if (!bus_manifest.empty()) a.insert(a.end(), {"--bus", bus_manifest});
        if (!events.empty()) a.insert(a.end(), {"--events", events});
        if (no_pin) a.push_back("--no-pin");
        return a;
      };
      // Slaves write into the master's stdout when events go there, else its stderr.
      std::string inherit = events == "-" ? "/proc/self/fd/1" : "/proc/self/fd/2";
      supervisor = std::make_unique<Supervisor>(
          io, instances, argv_for, [inherit](int) { return inherit; }, sink.get());
      supervisor->start();
    }

    auto interval = parse_duration(stats_every);
    asio::steady_timer stats_timer(io);
    std::function<void()> arm = [&] {
      stats_timer.expires_after(interval);
      stats_timer.async_wait([&](error_code ec) {
        if (ec) return;
        if (sink.get()) {
          auto j = broker.stats_json();
          if (supervisor) j["slaves"] = supervisor->to_json();
          sink.get()->emit("stats", j);
        }
        arm();
      });
    };
    if (interval.count() > 0) arm();

    tools::run_until_signal(io, [&] {
      stats_timer.cancel();
      if (supervisor) supervisor->stop();
      broker.stop();
    });
  } catch (const std::exception& e) {
    std::cerr << "broker: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
