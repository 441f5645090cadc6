#include "airn/pa.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace airn {

PaParams pa_from_backoff(double mean_input_power, double ibo_db, double gain,
                         double smoothness, double p_static_w) {
  if (mean_input_power <= 0.0) {
    throw std::invalid_argument("pa_from_backoff: mean input power must be > 0");
  }
  PaParams pa;
  pa.gain = gain;
  pa.smoothness = smoothness;
  pa.p_static_w = p_static_w;
  pa.a_sat = gain * std::sqrt(mean_input_power) * std::pow(10.0, ibo_db / 20.0);
  return pa;
}

SampleBuffer amplify(const SampleBuffer& buf, const PaParams& pa) {
  SampleBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples = buf.samples.unaryExpr(
      [&pa](std::complex<double> x) { return rapp_am_am(x, pa); });
  return out;
}

double consumed_energy_j(const SampleBuffer& buf, const PaParams& pa) {
  if (buf.samples.size() == 0) {
    throw std::invalid_argument("consumed_energy_j: empty buffer");
  }
  const double t_s = 1.0 / buf.sample_rate_hz;
  const double p_sat = pa.a_sat * pa.a_sat;
  double energy = 0.0;
  for (Eigen::Index i = 0; i < buf.samples.size(); ++i) {
    const double p_out = std::norm(rapp_am_am(buf.samples[i], pa));
    energy += ((4.0 / std::numbers::pi) * std::sqrt(p_out * p_sat) +
               pa.p_static_w) *
              t_s;
  }
  return energy;
}

DistortionReport measure_distortion(const std::vector<SymbolGrid>& tx_grids,
                                    const ChannelGrid& channel,
                                    const PaParams& pa, double noise_snr_db,
                                    RngStream& rng, int fft_size, int cp_len) {
  if (tx_grids.empty()) {
    throw std::invalid_argument("measure_distortion: no transmit grids");
  }
  const Eigen::Index n_ant = static_cast<Eigen::Index>(tx_grids.size());
  const Eigen::Index n_bins = tx_grids.front().n_bins();
  const Eigen::Index n_sym = tx_grids.front().n_symbols();
  for (const auto& g : tx_grids) {
    if (g.n_bins() != n_bins || g.n_symbols() != n_sym) {
      throw std::invalid_argument("measure_distortion: tx grid shape mismatch");
    }
  }
  if (channel.n_antennas() != n_ant) {
    throw std::invalid_argument(
        "measure_distortion: channel has " +
        std::to_string(channel.n_antennas()) + " antennas, got " +
        std::to_string(n_ant) + " tx grids");
  }
  if (channel.n_subcarriers() != n_bins) {
    throw std::invalid_argument(
        "measure_distortion: channel subcarrier count != grid bin count");
  }
  const Eigen::Index n_users = channel.m_users();
  const std::vector<int>& active = tx_grids.front().active_bins;

  // Intended receive symbols: s_u(k,m) of the undistorted grid.
  std::vector<Eigen::MatrixXcd> intended(
      static_cast<size_t>(n_users), Eigen::MatrixXcd::Zero(n_bins, n_sym));
  // Received (distorted) frequency-domain user signal before noise.
  std::vector<Eigen::MatrixXcd> received = intended;

  // Transmit chain per antenna: modulate, amplify, demodulate back.
  std::vector<Eigen::MatrixXcd> amplified_bins;
  amplified_bins.reserve(static_cast<size_t>(n_ant));
  for (const auto& g : tx_grids) {
    const SampleBuffer y = amplify(ofdm_modulate(g, fft_size, cp_len), pa);
    amplified_bins.push_back(
        ofdm_demodulate(y, fft_size, cp_len, static_cast<int>(n_sym))
            .symbols.topRows(n_bins));
  }

  Eigen::VectorXcd x_k(n_ant), y_k(n_ant);
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    const Eigen::MatrixXcd& hk = channel.h[static_cast<size_t>(k)];
    for (Eigen::Index m = 0; m < n_sym; ++m) {
      for (Eigen::Index a = 0; a < n_ant; ++a) {
        x_k[a] = tx_grids[static_cast<size_t>(a)].symbols(k, m);
        y_k[a] = amplified_bins[static_cast<size_t>(a)](k, m);
      }
      const Eigen::VectorXcd s_users = hk * x_k;
      const Eigen::VectorXcd r_users = hk * y_k;
      for (Eigen::Index u = 0; u < n_users; ++u) {
        intended[static_cast<size_t>(u)](k, m) = s_users[u];
        received[static_cast<size_t>(u)](k, m) = r_users[u];
      }
    }
  }

  // Receiver side per user: back to time domain, add noise, demodulate.
  // The received grid carries in-band intermodulation products on inactive
  // bins too, so it is a full-bin grid; EVM is still scored on active bins.
  std::vector<int> all_bins(static_cast<size_t>(n_bins));
  for (Eigen::Index k = 0; k < n_bins; ++k) all_bins[static_cast<size_t>(k)] = static_cast<int>(k);
  double err_total = 0.0, sig_total = 0.0;
  DistortionReport report;
  report.per_user_sinr.resize(n_users);
  for (Eigen::Index u = 0; u < n_users; ++u) {
    SymbolGrid rx_grid{received[static_cast<size_t>(u)], all_bins};
    const SampleBuffer rx_time = ofdm_modulate(rx_grid, fft_size, cp_len);
    const SampleBuffer noisy = awgn(rx_time, noise_snr_db, rng);
    const Eigen::MatrixXcd s_hat =
        ofdm_demodulate(noisy, fft_size, cp_len, static_cast<int>(n_sym))
            .symbols.topRows(n_bins);
    double err_u = 0.0, sig_u = 0.0;
    for (int k : active) {
      for (Eigen::Index m = 0; m < n_sym; ++m) {
        err_u += std::norm(s_hat(k, m) - intended[static_cast<size_t>(u)](k, m));
        sig_u += std::norm(intended[static_cast<size_t>(u)](k, m));
      }
    }
    err_total += err_u;
    sig_total += sig_u;
    report.per_user_sinr[u] = err_u > 0.0 ? sig_u / err_u : 1e30;
  }
  if (sig_total == 0.0) {
    throw std::invalid_argument("measure_distortion: intended signal is zero");
  }
  report.evm_rms = std::sqrt(err_total / sig_total);
  return report;
}

}  // namespace airn
