#include "airn/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

#include "airn/fft.hpp"

namespace airn {

namespace detail {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Eigen::VectorXcd dft_orthonormal(const Eigen::VectorXcd& x) {
  if (x.size() <= 1) return x;
  Eigen::FFT<double> fft;
  Eigen::VectorXcd y;
  fft.fwd(y, x);
  y /= std::sqrt(static_cast<double>(x.size()));
  return y;
}

Eigen::VectorXcd idft_orthonormal(const Eigen::VectorXcd& x) {
  if (x.size() <= 1) return x;
  Eigen::FFT<double> fft;
  Eigen::VectorXcd y;
  fft.inv(y, x);  // Eigen's inv scales by 1/N
  y *= std::sqrt(static_cast<double>(x.size()));
  return y;
}

}  // namespace detail

double mean_power(const SampleBuffer& buf) {
  if (buf.samples.size() == 0) {
    throw std::invalid_argument("mean_power: empty buffer");
  }
  return buf.samples.squaredNorm() / static_cast<double>(buf.samples.size());
}

double papr_db(const SampleBuffer& buf) {
  if (buf.samples.size() == 0) {
    throw std::invalid_argument("papr_db: empty buffer");
  }
  const double peak = buf.samples.cwiseAbs2().maxCoeff();
  if (peak == 0.0) {
    throw std::invalid_argument("papr_db: all-zero buffer, ratio undefined");
  }
  return 10.0 * std::log10(peak / mean_power(buf));
}

Eigen::VectorXcd qpsk_map(const std::vector<uint8_t>& bits) {
  if (bits.size() % 2 != 0) {
    throw std::invalid_argument("qpsk_map: odd bit count");
  }
  const double a = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd out(bits.size() / 2);
  for (size_t i = 0; i < bits.size(); i += 2) {
    out[static_cast<Eigen::Index>(i / 2)] = {bits[i] ? -a : a,
                                             bits[i + 1] ? -a : a};
  }
  return out;
}

std::vector<uint8_t> qpsk_demap(const Eigen::VectorXcd& symbols) {
  std::vector<uint8_t> bits(static_cast<size_t>(symbols.size()) * 2);
  for (Eigen::Index i = 0; i < symbols.size(); ++i) {
    bits[static_cast<size_t>(2 * i)] = symbols[i].real() < 0.0 ? 1 : 0;
    bits[static_cast<size_t>(2 * i + 1)] = symbols[i].imag() < 0.0 ? 1 : 0;
  }
  return bits;
}

SampleBuffer ofdm_modulate(const SymbolGrid& grid, int fft_size, int cp_len,
                           double sample_rate_hz) {
  if (!detail::is_power_of_two(fft_size)) {
    throw std::invalid_argument("ofdm_modulate: fft_size must be a power of two");
  }
  if (fft_size < grid.n_bins()) {
    throw std::invalid_argument("ofdm_modulate: fft_size < grid bin count");
  }
  if (cp_len < 0) {
    throw std::invalid_argument("ofdm_modulate: negative cp_len");
  }
  const Eigen::Index n_sym = grid.n_symbols();
  const Eigen::Index sym_len = fft_size + cp_len;
  SampleBuffer buf;
  buf.sample_rate_hz = sample_rate_hz;
  buf.samples.resize(n_sym * sym_len);
  Eigen::VectorXcd bins = Eigen::VectorXcd::Zero(fft_size);
  for (Eigen::Index m = 0; m < n_sym; ++m) {
    bins.setZero();
    bins.head(grid.n_bins()) = grid.symbols.col(m);
    const Eigen::VectorXcd body = detail::idft_orthonormal(bins);
    buf.samples.segment(m * sym_len, cp_len) = body.tail(cp_len);
    buf.samples.segment(m * sym_len + cp_len, fft_size) = body;
  }
  return buf;
}

SymbolGrid ofdm_demodulate(const SampleBuffer& buf, int fft_size, int cp_len,
                           int n_sym) {
  if (!detail::is_power_of_two(fft_size)) {
    throw std::invalid_argument("ofdm_demodulate: fft_size must be a power of two");
  }
  const Eigen::Index sym_len = fft_size + cp_len;
  if (buf.samples.size() != static_cast<Eigen::Index>(n_sym) * sym_len) {
    throw std::invalid_argument(
        "ofdm_demodulate: buffer length " + std::to_string(buf.samples.size()) +
        " != n_sym * (fft_size + cp_len) = " + std::to_string(n_sym * sym_len));
  }
  SymbolGrid grid;
  grid.symbols.resize(fft_size, n_sym);
  grid.active_bins.resize(fft_size);
  for (int k = 0; k < fft_size; ++k) grid.active_bins[k] = k;
  for (int m = 0; m < n_sym; ++m) {
    const Eigen::VectorXcd body =
        buf.samples.segment(m * sym_len + cp_len, fft_size);
    grid.symbols.col(m) = detail::dft_orthonormal(body);
  }
  return grid;
}

ChannelGrid gen_channel(int m_users, int n_antennas, int n_subcarriers,
                        RngStream& rng) {
  if (m_users < 1) {
    throw std::invalid_argument("gen_channel: m_users must be >= 1");
  }
  if (n_antennas < m_users) {
    throw std::invalid_argument("gen_channel: n_antennas < m_users");
  }
  if (n_subcarriers < 1) {
    throw std::invalid_argument("gen_channel: n_subcarriers must be >= 1");
  }
  constexpr int kMaxRetries = 10;
  constexpr double kRankTol = 1e-10;
  ChannelGrid grid;
  grid.h.reserve(static_cast<size_t>(n_subcarriers));
  for (int k = 0; k < n_subcarriers; ++k) {
    Eigen::MatrixXcd hk(m_users, n_antennas);
    bool full_rank = false;
    for (int attempt = 0; attempt < kMaxRetries && !full_rank; ++attempt) {
      for (Eigen::Index r = 0; r < hk.rows(); ++r) {
        for (Eigen::Index c = 0; c < hk.cols(); ++c) {
          hk(r, c) = rng.next_cgaussian(1.0);
        }
      }
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(hk);
      full_rank = svd.singularValues().minCoeff() > kRankTol;
    }
    if (!full_rank) {
      throw std::runtime_error("gen_channel: rank-deficient draw persisted at subcarrier " +
                               std::to_string(k));
    }
    grid.h.push_back(std::move(hk));
  }
  return grid;
}

SampleBuffer awgn(const SampleBuffer& buf, double snr_db, RngStream& rng) {
  if (buf.samples.size() == 0) {
    throw std::invalid_argument("awgn: empty buffer");
  }
  const double noise_var = mean_power(buf) / std::pow(10.0, snr_db / 10.0);
  SampleBuffer out = buf;
  for (Eigen::Index i = 0; i < out.samples.size(); ++i) {
    out.samples[i] += rng.next_cgaussian(noise_var);
  }
  return out;
}

}  // namespace airn
