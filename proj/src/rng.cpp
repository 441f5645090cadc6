#include "airn/rng.hpp"

#include <cmath>
#include <numbers>

namespace airn {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer (Steele et al.), used for both mixing and output.
uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  state_ = mix64(seed + kGolden) ^ mix64(stream_id * kGolden + 1);
}

uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  // u1 in (0,1] keeps the log finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> RngStream::next_cgaussian(double variance) {
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = next_uniform();
  const double r = std::sqrt(-std::log(u1) * variance);
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

RngStream RngStream::substream(uint64_t key) const {
  return RngStream(seed_, mix64(stream_id_ ^ (key * kGolden + kGolden)));
}

}  // namespace airn
