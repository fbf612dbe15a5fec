#include <CLI11.hpp>

#include <iostream>

#include "iotc/slotstore/node.hpp"
#include "tool_common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Slot-store node"};
  std::string config, node, events;
  app.add_option("--config", config, "cluster manifest (TOML)")->required()->check(CLI::ExistingFile);
  app.add_option("--node", node, "id of this node in the manifest")->required();
  app.add_option("--events", events, "JSON event log: a file, or - for stdout");
  CLI11_PARSE(app, argc, argv);

  try {
    auto manifest = iotc::slotstore::ClusterManifest::load(config);
    iotc::tools::EventSink sink(events);
    iotc::asio::io_context io;
    iotc::slotstore::StoreNode store(io, manifest, node, sink.get());
    store.start();
    std::cerr << "slotstore " << node << " listening on " << store.local_endpoint() << "\n";
    iotc::tools::run_until_signal(io, [&] { store.stop(); });
  } catch (const std::exception& e) {
    std::cerr << "slotstore: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
