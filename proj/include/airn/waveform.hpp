#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "airn/rng.hpp"
#include "airn/sample_buffer.hpp"

namespace airn {

/// Frequency-domain symbol grid: one row per subcarrier bin, one column per
/// OFDM symbol. Bins not listed in active_bins are exactly zero.
struct SymbolGrid {
  Eigen::MatrixXcd symbols;       // n_bins x n_symbols
  std::vector<int> active_bins;   // sorted, unique, within [0, n_bins)

  Eigen::Index n_bins() const { return symbols.rows(); }
  Eigen::Index n_symbols() const { return symbols.cols(); }
};

/// Per-subcarrier flat MIMO channel: h[k] is M_r x N_t.
struct ChannelGrid {
  std::vector<Eigen::MatrixXcd> h;

  int n_subcarriers() const { return static_cast<int>(h.size()); }
  Eigen::Index m_users() const { return h.empty() ? 0 : h.front().rows(); }
  Eigen::Index n_antennas() const { return h.empty() ? 0 : h.front().cols(); }
};

/// Gray-mapped unit-power QPSK: bit pair (b0,b1) -> ((-1)^b0 + j(-1)^b1)/sqrt(2).
Eigen::VectorXcd qpsk_map(const std::vector<uint8_t>& bits);

/// Nearest-constellation-point decision, inverse of qpsk_map.
std::vector<uint8_t> qpsk_demap(const Eigen::VectorXcd& symbols);

/// Orthonormal-IDFT OFDM modulator. Grid bins map directly onto DFT bins
/// 0..n_bins-1 (use wrapped indices fft_size-k for negative frequencies);
/// remaining bins are zero. A cyclic prefix of cp_len samples is prepended
/// to each symbol. fft_size must be a power of two >= grid.n_bins().
SampleBuffer ofdm_modulate(const SymbolGrid& grid, int fft_size, int cp_len,
                           double sample_rate_hz = 1.0);

/// Strips cyclic prefixes and applies the forward orthonormal DFT. Returns a
/// full fft_size-row grid (all bins marked active). Exact inverse of
/// ofdm_modulate up to rounding.
SymbolGrid ofdm_demodulate(const SampleBuffer& buf, int fft_size, int cp_len,
                           int n_sym);

/// i.i.d. CN(0,1) Rayleigh channel per subcarrier; every matrix is regenerated
/// (up to 10 times) until it has full row rank within 1e-10.
ChannelGrid gen_channel(int m_users, int n_antennas, int n_subcarriers,
                        RngStream& rng);

/// Adds complex white Gaussian noise with per-sample variance
/// mean_power(buf) / 10^(snr_db/10).
SampleBuffer awgn(const SampleBuffer& buf, double snr_db, RngStream& rng);

}  // namespace airn
