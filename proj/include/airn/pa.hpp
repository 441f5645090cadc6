#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "airn/rng.hpp"
#include "airn/sample_buffer.hpp"
#include "airn/waveform.hpp"

namespace airn {

/// Rapp solid-state amplifier parameters (memoryless AM/AM, no AM/PM).
struct PaParams {
  double gain = 1.0;        // linear small-signal gain G
  double a_sat = 1.0;       // output saturation amplitude
  double smoothness = 2.0;  // Rapp knee parameter p
  double p_static_w = 0.0;  // per-chain static power draw, watts
};

/// PaParams whose saturation level sits ibo_db above the given mean input
/// power: a_sat = gain * sqrt(mean_input_power) * 10^(ibo_db/20).
PaParams pa_from_backoff(double mean_input_power, double ibo_db,
                         double gain = 1.0, double smoothness = 2.0,
                         double p_static_w = 0.0);

/// Rapp AM/AM: |out| = G|x| / (1 + (G|x|/a_sat)^(2p))^(1/(2p)), phase kept.
inline std::complex<double> rapp_am_am(std::complex<double> x,
                                       const PaParams& pa) {
  const double a = std::abs(x);
  if (a == 0.0) return {0.0, 0.0};
  const double drive = pa.gain * a / pa.a_sat;
  const double comp =
      std::pow(1.0 + std::pow(drive, 2.0 * pa.smoothness),
               1.0 / (2.0 * pa.smoothness));
  return x * (pa.gain / comp);
}

/// Elementwise rapp_am_am over a buffer.
SampleBuffer amplify(const SampleBuffer& buf, const PaParams& pa);

/// Class-B consumed energy for driving this buffer through the PA:
/// sum_t [ (4/pi) * sqrt(P_out(t) * P_sat) + p_static_w ] * T_s,
/// with P_out the amplified sample power and P_sat = a_sat^2.
double consumed_energy_j(const SampleBuffer& buf, const PaParams& pa);

struct DistortionReport {
  double evm_rms = 0.0;            // sqrt(E|s_hat - s|^2 / E|s|^2)
  Eigen::VectorXd per_user_sinr;   // linear, E|s_u|^2 / E|s_hat_u - s_u|^2
};

/// Runs the full link chain for per-antenna frequency-domain transmit grids:
/// OFDM modulate -> amplify -> per-subcarrier channel -> AWGN -> OFDM
/// demodulate, then compares the received user symbols against the intended
/// ones (s_k = H_k x_k of the undistorted grid), restricted to active bins.
DistortionReport measure_distortion(const std::vector<SymbolGrid>& tx_grids,
                                    const ChannelGrid& channel,
                                    const PaParams& pa, double noise_snr_db,
                                    RngStream& rng, int fft_size, int cp_len);

}  // namespace airn
