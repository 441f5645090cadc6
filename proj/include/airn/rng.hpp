#pragma once

#include <complex>
#include <cstdint>

namespace airn {

/// Deterministic counter-style random stream (SplitMix64 core).
///
/// A stream is fully identified by (seed, stream_id): two streams built from
/// the same pair produce the same draw sequence. Independent work units get
/// independent streams via substream() instead of sharing one generator.
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint64_t stream_id = 0);

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t next_u64();

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_uniform();

  /// Standard normal via Box-Muller (consumes one uniform pair per call).
  double next_gaussian();

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> next_cgaussian(double variance = 1.0);

  /// Derived stream for an independent work unit identified by `key`.
  RngStream substream(uint64_t key) const;

 private:
  uint64_t seed_;
  uint64_t stream_id_;
  uint64_t state_;
};

}  // namespace airn
