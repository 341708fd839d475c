#pragma once

#include <cstdint>
#include <limits>

namespace fibersim {

// Counter-based generator: output i of stream s is a keyed hash of (seed, s, i).
// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  result_type at(std::uint64_t i) const {
    std::uint64_t k = mix(seed_ ^ mix(stream_ + 0x632be59bd9b4e019ULL));
    return mix(k + i * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t c) { counter_ = c; }

  CounterRng split(std::uint64_t sub) const { return CounterRng(seed_, mix(stream_ ^ (sub + 1))); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace fibersim
