#include "iotc/bench/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace iotc::bench {

namespace fs = std::filesystem;

nlohmann::json MetricsReport::to_json() const {
  return {{"config", config.to_json()},
          {"issued", issued},
          {"success", success},
          {"failure", failure},
          {"in_flight_at_end", in_flight_at_end},
          {"conserved", conserved()},
          {"window_success", window_success},
          {"window_failure", window_failure},
          {"window_s", window_s},
          {"elapsed_s", elapsed_s},
          {"throughput", throughput()},
          {"raw_throughput", raw_throughput()},
          {"mean_latency_us", mean_latency_us()},
          {"raw_mean_latency_us", raw_mean_us},
          {"p50_us", latency.percentile(0.5)},
          {"p99_us", latency.percentile(0.99)},
          {"min_us", latency.min()},
          {"max_us", latency.max()},
          {"max_outstanding", max_outstanding},
          {"reconnects", reconnects},
          {"client_failures", client_failures},
          {"duplicates", duplicates},
          {"foreign", foreign},
          {"skipped_ticks", skipped_ticks},
          {"mean_cpu", mean_cpu(cpu)}};
}

SummaryRow summarize(const MetricsReport& r, int run) {
  SummaryRow s;
  s.run = run;
  s.mode = std::string(mode_name(r.config.mode));
  s.label = r.config.label;
  s.clients = r.config.clients;
  s.duration_s = r.config.duration_s;
  s.ramp_s = r.config.effective_ramp_s();
  s.seed = r.config.seed;
  s.qos = r.config.mode == Mode::Mqtt ? r.config.qos : 0;
  s.issued = r.issued;
  s.success = r.success;
  s.failure = r.failure;
  s.in_flight = r.in_flight_at_end;
  s.mean_latency_us = r.mean_latency_us();
  s.throughput = r.throughput();
  s.raw_throughput = r.raw_throughput();
  s.mean_cpu = mean_cpu(r.cpu);
  return s;
}

namespace {

const char* kSummaryHeader =
    "run,mode,label,clients,duration_s,ramp_s,seed,qos,issued,success,failure,in_flight,"
    "mean_latency_us,throughput_per_s,raw_throughput_per_s,mean_cpu_percent";
const char* kHistHeader = "run,lower_us,upper_us,count";
const char* kCpuHeader = "run,pid,t_ms,cpu_percent,vanished";

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

template <typename T>
T parse(const std::string& s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad CSV value '" + s + "'");
  }
  return v;
}

// Data lines of a CSV file (header skipped). Missing file: empty.
std::vector<std::vector<std::string>> read_rows(const fs::path& p, std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  if (!in) return rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != columns) throw std::runtime_error(p.string() + ": wrong column count");
    rows.push_back(std::move(f));
  }
  return rows;
}

// Text of an existing CSV with its header line, or just the header.
std::string existing_or_header(const fs::path& p, const char* header) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::string(header) + "\n";
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  if (s.empty()) return std::string(header) + "\n";
  if (s.back() != '\n') s += '\n';
  return s;
}

const char* kPlotSource = R"PY(#!/usr/bin/env python3
"""Plots latency, throughput and CPU against client count from summary.csv.

usage: plot_bench.py [DIR [OUTDIR]]
"""
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    src = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    out = sys.argv[2] if len(sys.argv) > 2 else src
    series = defaultdict(list)
    with open(os.path.join(src, "summary.csv"), newline="") as f:
        for row in csv.DictReader(f):
            name = row["mode"] + (" " + row["label"] if row["label"] else "")
            series[name].append(row)
    figures = [
        ("latency_vs_clients.png", "mean latency (ms)", lambda r: float(r["mean_latency_us"]) / 1000.0),
        ("throughput_vs_clients.png", "throughput (ops/s)", lambda r: float(r["throughput_per_s"])),
        ("cpu_vs_clients.png", "mean CPU (% of one core)", lambda r: float(r["mean_cpu_percent"])),
    ]
    os.makedirs(out, exist_ok=True)
    for filename, ylabel, value in figures:
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, rows in sorted(series.items()):
            rows = sorted(rows, key=lambda r: int(r["clients"]))
            ax.plot([int(r["clients"]) for r in rows], [value(r) for r in rows], marker="o", label=name)
        ax.set_xlabel("clients")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        if series:
            ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(out, filename))
        plt.close(fig)
        print(os.path.join(out, filename))


if __name__ == "__main__":
    main()
)PY";

struct Staged {
  fs::path tmp;
  fs::path final;
};

// Writes every file to a temp name first; renames only when all writes
// succeeded. On failure the temps are removed and the error rethrown.
void commit(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<Staged> staged;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& s : staged) fs::remove(s.tmp, ec);
  };
  try {
    for (const auto& [name, text] : files) {
      Staged s{dir / ("." + name + ".tmp." + std::to_string(::getpid())), dir / name};
      staged.push_back(s);
      std::ofstream out(s.tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + s.tmp.string());
      out << text;
      out.flush();
      if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + s.tmp.string());
    }
    for (const auto& s : staged) fs::rename(s.tmp, s.final);
  } catch (...) {
    cleanup();
    throw;
  }
}

}  // namespace

std::vector<SummaryRow> read_summary(const fs::path& dir) {
  std::vector<SummaryRow> out;
  for (const auto& f : read_rows(dir / "summary.csv", 16)) {
    SummaryRow r;
    r.run = parse<int>(f[0]);
    r.mode = f[1];
    r.label = f[2];
    r.clients = parse<int>(f[3]);
    r.duration_s = parse<int>(f[4]);
    r.ramp_s = parse<int>(f[5]);
    r.seed = parse<std::uint64_t>(f[6]);
    r.qos = parse<int>(f[7]);
    r.issued = parse<std::uint64_t>(f[8]);
    r.success = parse<std::uint64_t>(f[9]);
    r.failure = parse<std::uint64_t>(f[10]);
    r.in_flight = parse<std::uint64_t>(f[11]);
    r.mean_latency_us = parse<double>(f[12]);
    r.throughput = parse<double>(f[13]);
    r.raw_throughput = parse<double>(f[14]);
    r.mean_cpu = parse<double>(f[15]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<HistRow> read_histograms(const fs::path& dir) {
  std::vector<HistRow> out;
  for (const auto& f : read_rows(dir / "latency_hist.csv", 4)) {
    out.push_back({parse<int>(f[0]), parse<std::uint64_t>(f[1]), parse<std::uint64_t>(f[2]),
                   parse<std::uint64_t>(f[3])});
  }
  return out;
}

std::vector<CpuRow> read_cpu_series(const fs::path& dir) {
  std::vector<CpuRow> out;
  for (const auto& f : read_rows(dir / "cpu_series.csv", 5)) {
    CpuRow r;
    r.run = parse<int>(f[0]);
    r.sample.pid = parse<pid_t>(f[1]);
    r.sample.t_ms = parse<std::int64_t>(f[2]);
    r.sample.percent = parse<double>(f[3]);
    r.sample.vanished = parse<int>(f[4]) != 0;
    out.push_back(r);
  }
  return out;
}

int emit_report(const MetricsReport& r, const fs::path& dir) {
  int run = 0;
  for (const auto& row : read_summary(dir)) run = std::max(run, row.run + 1);

  SummaryRow s = summarize(r, run);
  std::string summary = existing_or_header(dir / "summary.csv", kSummaryHeader);
  summary += std::to_string(s.run) + "," + quote(s.mode) + "," + quote(s.label) + "," +
             std::to_string(s.clients) + "," + std::to_string(s.duration_s) + "," +
             std::to_string(s.ramp_s) + "," + std::to_string(s.seed) + "," + std::to_string(s.qos) +
             "," + std::to_string(s.issued) + "," + std::to_string(s.success) + "," +
             std::to_string(s.failure) + "," + std::to_string(s.in_flight) + "," +
             num(s.mean_latency_us) + "," + num(s.throughput) + "," + num(s.raw_throughput) + "," +
             num(s.mean_cpu) + "\n";

  std::string hist = existing_or_header(dir / "latency_hist.csv", kHistHeader);
  for (const auto& b : r.latency.buckets()) {
    hist += std::to_string(run) + "," + std::to_string(b.lower) + "," + std::to_string(b.upper) +
            "," + std::to_string(b.count) + "\n";
  }

  std::string cpu = existing_or_header(dir / "cpu_series.csv", kCpuHeader);
  for (const auto& c : r.cpu) {
    cpu += std::to_string(run) + "," + std::to_string(c.pid) + "," + std::to_string(c.t_ms) + "," +
           num(c.percent) + "," + (c.vanished ? "1" : "0") + "\n";
  }

  commit(dir, {{"summary.csv", summary},
               {"latency_hist.csv", hist},
               {"cpu_series.csv", cpu},
               {kPlotScript, kPlotSource}});
  std::error_code ec;
  fs::permissions(dir / kPlotScript, fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                  fs::perm_options::add, ec);
  return run;
}

void emit_empty(const fs::path& dir) {
  commit(dir, {{"summary.csv", std::string(kSummaryHeader) + "\n"},
               {"latency_hist.csv", std::string(kHistHeader) + "\n"},
               {"cpu_series.csv", std::string(kCpuHeader) + "\n"},
               {kPlotScript, kPlotSource}});
}

}  // namespace iotc::bench
