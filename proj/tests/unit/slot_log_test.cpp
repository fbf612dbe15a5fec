#include "iotc/slotstore/log.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>

#include "temp_dir.hpp"

namespace iotc::slotstore {
namespace {

using testing::TempDir;

LogRecord set_rec(std::uint64_t seq, std::string k, std::string v) {
  return {seq, LogOp::Set, std::move(k), std::move(v), 1700000000000 + static_cast<std::int64_t>(seq)};
}
LogRecord del_rec(std::uint64_t seq, std::string k) { return {seq, LogOp::Del, std::move(k), {}, 42}; }

// Commands as the test sees them, and the plain map they should produce.
struct Stream {
  std::vector<LogRecord> log;
  std::map<std::string, std::string> oracle;
};

Stream random_stream(std::mt19937_64& rng, int n) {
  Stream s;
  for (int i = 1; i <= n; ++i) {
    std::string key = "k" + std::to_string(rng() % 50);
    if (rng() % 4 == 0) {
      s.log.push_back(del_rec(i, key));
      s.oracle.erase(key);
    } else {
      std::string value(rng() % 20, 'a' + static_cast<char>(rng() % 26));
      s.log.push_back(set_rec(i, key, value));
      s.oracle[key] = value;
    }
  }
  return s;
}

std::map<std::string, std::string> as_map(const Table& t) { return {t.begin(), t.end()}; }

TEST(LogCodec, RoundTrip) {
  for (const auto& r : {set_rec(1, "key", "value"), del_rec(2, "key"), set_rec(3, "", ""),
                        set_rec(4, std::string(1000, 'k'), std::string(70000, '\0'))}) {
    auto bytes = encode_log_record(r);
    LogRecord back;
    EXPECT_EQ(decode_log_record(bytes, back), bytes.size());
    EXPECT_EQ(back, r);
  }
}

TEST(LogCodec, PartialRecordNeedsMoreBytes) {
  auto bytes = encode_log_record(set_rec(1, "k", "v"));
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    LogRecord r;
    EXPECT_EQ(decode_log_record(std::span(bytes.data(), n), r), 0u);
  }
}

TEST(LogCodec, FlippedBitFailsChecksum) {
  auto bytes = encode_log_record(set_rec(7, "key", "value"));
  for (std::size_t i = 4; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x10;
    LogRecord r;
    EXPECT_THROW(decode_log_record(bad, r), CorruptLogError) << i;
  }
}

TEST(LogFile, TornTailIsTruncatedOnRecovery) {
  TempDir dir;
  auto path = dir / "node.log";
  {
    LogWriter w(path);
    for (int i = 1; i <= 5; ++i) w.append(set_rec(i, "k" + std::to_string(i), "v"));
  }
  auto full_size = std::filesystem::file_size(path);
  auto last = encode_log_record(set_rec(6, "k6", "v"));
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(last.data()), static_cast<std::streamsize>(last.size() - 3));
  }
  LogReadResult read = recover_log(path);
  EXPECT_TRUE(read.torn_tail);
  EXPECT_EQ(read.records.size(), 5u);
  EXPECT_EQ(std::filesystem::file_size(path), full_size);
  EXPECT_FALSE(read_log(path).torn_tail);
}

TEST(LogFile, CorruptFinalChecksumCountsAsTorn) {
  TempDir dir;
  auto path = dir / "node.log";
  {
    LogWriter w(path);
    w.append(set_rec(1, "a", "1"));
    w.append(set_rec(2, "b", "2"));
  }
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  auto read = recover_log(path);
  EXPECT_TRUE(read.torn_tail);
  EXPECT_EQ(read.records.size(), 1u);
}

TEST(LogFile, DamageBeforeTheTailThrows) {
  TempDir dir;
  auto path = dir / "node.log";
  {
    LogWriter w(path);
    for (int i = 1; i <= 3; ++i) w.append(set_rec(i, "k", "value"));
  }
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(10);
    f.put('\x55');
  }
  EXPECT_THROW(read_log(path), CorruptLogError);
}

TEST(LogFile, MissingFileIsEmpty) {
  TempDir dir;
  auto read = read_log(dir / "absent.log");
  EXPECT_TRUE(read.records.empty());
  EXPECT_FALSE(read.torn_tail);
}

TEST(Replay, Examples) {
  EXPECT_TRUE(replay_log({}).empty());
  std::vector<LogRecord> log{set_rec(1, "k", "1"), set_rec(2, "k", "2"), del_rec(3, "k")};
  EXPECT_TRUE(replay_log(log).empty());
}

TEST(Replay, GapAndRegressionNameTheBadSequence) {
  std::vector<LogRecord> gap{set_rec(1, "a", ""), set_rec(2, "a", ""), set_rec(4, "a", "")};
  try {
    replay_log(gap);
    FAIL();
  } catch (const CorruptLogError& e) {
    EXPECT_EQ(e.sequence(), 4u);
  }
  std::vector<LogRecord> regress{set_rec(1, "a", ""), set_rec(2, "a", ""), set_rec(2, "b", "")};
  try {
    replay_log(regress);
    FAIL();
  } catch (const CorruptLogError& e) {
    EXPECT_EQ(e.sequence(), 2u);
  }
  std::vector<LogRecord> late_start{set_rec(3, "a", "")};
  EXPECT_THROW(replay_log(late_start), CorruptLogError);
}

TEST(Replay, RandomStreamMatchesMapOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Stream s = random_stream(rng, 1000);
    EXPECT_EQ(as_map(replay_log(s.log)), s.oracle);
  }
}

TEST(Replay, IdempotentFromAnyCheckpoint) {
  std::mt19937_64 rng(12);
  Stream s = random_stream(rng, 1000);
  for (std::size_t cut : {0u, 1u, 17u, 500u, 999u, 1000u}) {
    Table prefix = replay_log(std::span(s.log.data(), cut));
    // Replaying the whole log on top of the prefix state skips what it holds.
    EXPECT_EQ(as_map(replay_log(s.log, prefix, cut)), s.oracle) << cut;
    // Replaying only the suffix gives the same answer.
    EXPECT_EQ(as_map(replay_log(std::span(s.log).subspan(cut), prefix, cut)), s.oracle) << cut;
  }
}

TEST(Replay, RecordThenReplayThroughAFile) {
  TempDir dir;
  std::mt19937_64 rng(13);
  Stream s = random_stream(rng, 1000);
  {
    LogWriter w(dir / "x.log");
    for (const auto& r : s.log) w.append(r);
  }
  auto read = read_log(dir / "x.log");
  EXPECT_EQ(read.records, s.log);
  EXPECT_EQ(as_map(replay_log(read.records)), s.oracle);
}

}  // namespace
}  // namespace iotc::slotstore
