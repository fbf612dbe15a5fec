#include "iotc/bench/histogram.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace iotc::bench {

std::size_t Histogram::index_of(std::uint64_t us) {
  if (us < kSub) return static_cast<std::size_t>(us);
  int e = std::bit_width(us) - 1;  // floor(log2 us), >= kSubBits
  std::uint64_t sub = (us >> (e - kSubBits)) - kSub;
  return static_cast<std::size_t>(kSub + static_cast<std::uint64_t>(e - kSubBits) * kSub + sub);
}

std::uint64_t Histogram::lower_of(std::size_t index) {
  if (index < kSub) return index;
  std::uint64_t k = (index - kSub) / kSub;  // exponent above kSubBits
  std::uint64_t sub = (index - kSub) % kSub;
  return (kSub + sub) << k;
}

std::uint64_t Histogram::upper_of(std::size_t index) {
  if (index < kSub) return index;
  std::uint64_t k = (index - kSub) / kSub;
  return lower_of(index) + (std::uint64_t{1} << k) - 1;
}

void Histogram::record(std::uint64_t us) {
  std::size_t i = index_of(us);
  if (i >= counts_.size()) counts_.resize(i + 1, 0);
  ++counts_[i];
  ++count_;
  min_ = std::min(min_, us);
  max_ = std::max(max_, us);
  sum_ += static_cast<double>(us);
}

void Histogram::merge(const Histogram& other) {
  if (other.counts_.size() > counts_.size()) counts_.resize(other.counts_.size(), 0);
  for (std::size_t i = 0; i < other.counts_.size(); ++i) counts_[i] += other.counts_[i];
  count_ += other.count_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
  sum_ += other.sum_;
}

std::uint64_t Histogram::percentile(double q) const {
  if (count_ == 0) return 0;
  q = std::clamp(q, 0.0, 1.0);
  auto rank = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(count_)));
  rank = std::max<std::uint64_t>(rank, 1);
  std::uint64_t seen = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    seen += counts_[i];
    if (seen >= rank) return std::min(upper_of(i), max_);
  }
  return max_;
}

std::vector<Histogram::Bucket> Histogram::buckets() const {
  std::vector<Bucket> out;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i]) out.push_back({lower_of(i), upper_of(i), counts_[i]});
  }
  return out;
}

}  // namespace iotc::bench
