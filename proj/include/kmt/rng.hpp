#pragma once

#include <cstdint>
#include <initializer_list>

namespace kmt {

// Counter-based stream: output i is a SplitMix64 finalization of key + (i+1)*golden.
// Streams for distinct (seed, path) are independent of construction order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t p : path) k = mix(k ^ mix(p + 0x9e3779b97f4a7c15ULL));
    return CounterRng(k);
  }

  CounterRng split(std::uint64_t tag) const { return derive(key_, {tag}); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on the open interval (0,1) with 53-bit resolution.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  // Standard normal by inversion of a uniform.
  double normal();

  std::uint64_t below(std::uint64_t bound);

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kmt
