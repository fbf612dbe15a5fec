#pragma once

#include <cstdint>
#include <vector>

namespace iotc::bench {

// Log-linear latency histogram over microseconds: exact below 32, then 32
// linear sub-buckets per power of two (relative error under 3.2%).
class Histogram {
 public:
  static constexpr int kSubBits = 5;
  static constexpr std::uint64_t kSub = 1u << kSubBits;

  struct Bucket {
    std::uint64_t lower = 0;  // inclusive
    std::uint64_t upper = 0;  // inclusive
    std::uint64_t count = 0;
    friend bool operator==(const Bucket&, const Bucket&) = default;
  };

  static std::size_t index_of(std::uint64_t us);
  static std::uint64_t lower_of(std::size_t index);
  static std::uint64_t upper_of(std::size_t index);

  void record(std::uint64_t us);
  void merge(const Histogram& other);

  std::uint64_t count() const { return count_; }
  std::uint64_t min() const { return count_ ? min_ : 0; }
  std::uint64_t max() const { return max_; }
  double sum() const { return sum_; }
  double mean() const { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }
  // Upper bound of the bucket holding the q-quantile sample.
  std::uint64_t percentile(double q) const;
  // Non-empty buckets in ascending order.
  std::vector<Bucket> buckets() const;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t count_ = 0;
  std::uint64_t min_ = UINT64_MAX;
  std::uint64_t max_ = 0;
  double sum_ = 0;
};

}  // namespace iotc::bench
