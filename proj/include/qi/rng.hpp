#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace qi {

// SplitMix64 output function (Stafford mix 13). Used as a stateless
// counter-based generator: draw i of a stream is mix64(key + i*golden).
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Counter-based random stream. Streams derived from distinct
// (seed, episode, purpose) triples are independent for simulation purposes,
// and a triple always reproduces the same draws no matter which thread or
// process consumes it. That is what makes per-episode results bit-identical
// across worker counts and reruns.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + kGolden * counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

enum class StreamPurpose : std::uint64_t {
  Horizon = 1,      // process lifetime T
  ChangePoint = 2,  // change time tau
  Observation = 3,  // per-step observation draws
};

inline std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t episode,
                                       StreamPurpose purpose) {
  std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  k = mix64(k ^ mix64(episode));
  k = mix64(k ^ static_cast<std::uint64_t>(purpose));
  return k;
}

inline RngStream make_stream(std::uint64_t seed, std::uint64_t episode, StreamPurpose purpose) {
  return RngStream(derive_stream_key(seed, episode, purpose));
}

// Inverse-CDF geometric sample on {1, 2, ...} with success probability p:
// Pr(K = k) = p (1-p)^{k-1}. Consumes exactly one uniform, so paired streams
// stay aligned when only parameters differ.
inline long sample_geometric(double u, double p) {
  if (p >= 1.0) return 1;
  const double r = std::log1p(-u) / std::log1p(-p);
  long k = 1 + static_cast<long>(std::floor(r));
  if (k < 1) k = 1;
  const long cap = 1L << 40;
  if (k > cap) k = cap;
  return k;
}

// Inverse-CDF draw from a finite distribution; returns a zero-based index.
inline int sample_categorical(double u, const std::vector<double>& probs) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace qi
