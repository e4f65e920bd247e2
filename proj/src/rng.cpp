#include "fiberlab/rng.hpp"

#include <cmath>

namespace fiberlab {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::kBitsX: return "bits/x";
    case Stream::kBitsY: return "bits/y";
    case Stream::kPhaseNoise: return "phase-noise";
    case Stream::kPmd: return "pmd";
    case Stream::kAse: return "ase";
    case Stream::kNnInit: return "nn-init";
    case Stream::kDropout: return "dropout";
    case Stream::kShuffle: return "shuffle";
    case Stream::kTest: return "test";
  }
  return "unknown";
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::seed_seq::result_type low32(std::uint64_t v) { return static_cast<std::seed_seq::result_type>(v & 0xFFFFFFFFu); }

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t substream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state ^= static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL;
  const std::uint64_t b = splitmix64(state);
  state ^= substream * 0x8CB92BA72F3D8DD7ULL;
  const std::uint64_t c = splitmix64(state);
  std::seed_seq seq{low32(a), low32(a >> 32), low32(b), low32(b >> 32), low32(c), low32(c >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, Stream stream, std::uint64_t substream)
    : engine_(make_engine(seed, stream, substream)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

}  // namespace fiberlab
