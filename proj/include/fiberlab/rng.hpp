#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fiberlab {

/// Independent random streams derived from one experiment seed.
enum class Stream : std::uint64_t {
  kBitsX = 1,
  kBitsY = 2,
  kPhaseNoise = 3,
  kPmd = 4,
  kAse = 5,
  kNnInit = 6,
  kDropout = 7,
  kShuffle = 8,
  kTest = 9,
};

std::string_view stream_name(Stream s);

std::uint64_t splitmix64(std::uint64_t& state);

/// mt19937_64 seeded from splitmix64(seed, stream, substream).
///
/// Uniform and normal draws are computed here rather than through
/// <random> distributions, whose outputs are implementation-defined, so
/// reruns are bit-exact across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::kTest, std::uint64_t substream = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller, cached pair).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fiberlab
