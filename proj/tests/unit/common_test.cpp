#include <gtest/gtest.h>

#include "iotc/common/duration.hpp"
#include "iotc/common/host_port.hpp"

namespace iotc {
namespace {

using namespace std::chrono_literals;

TEST(Duration, UnitsAndBareSeconds) {
  EXPECT_EQ(parse_duration("250ms"), 250ms);
  EXPECT_EQ(parse_duration("2s"), 2000ms);
  EXPECT_EQ(parse_duration("1.5s"), 1500ms);
  EXPECT_EQ(parse_duration("3m"), 180000ms);
  EXPECT_EQ(parse_duration("2"), 2000ms);
  EXPECT_EQ(parse_duration("0.25"), 250ms);
  EXPECT_EQ(parse_duration("0"), 0ms);
}

TEST(Duration, Rejects) {
  for (const char* bad : {"", "s", "ms", "-1s", "2x", "two", "2 s", "nan", "inf"}) {
    EXPECT_THROW(parse_duration(bad), std::invalid_argument) << bad;
  }
}

TEST(HostPortParse, Forms) {
  EXPECT_EQ(parse_host_port("10.1.2.3:80"), (HostPort{"10.1.2.3", 80}));
  EXPECT_EQ(parse_host_port(":1883"), (HostPort{"127.0.0.1", 1883}));
  EXPECT_EQ(parse_host_port("localhost:65535").str(), "127.0.0.1:65535");  // normalized
  EXPECT_THROW(parse_host_port("10.1.2.3"), std::invalid_argument);
  EXPECT_THROW(parse_host_port("h:65536"), std::invalid_argument);
  EXPECT_THROW(parse_host_port("h:x"), std::invalid_argument);
}

}  // namespace
}  // namespace iotc
