#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airn/pa.hpp"
#include "airn/rng.hpp"
#include "airn/sample_buffer.hpp"
#include "airn/waveform.hpp"

namespace airn {

/// Per-subcarrier transmit vectors plus the derived per-antenna waveforms.
struct PrecodeSolution {
  Eigen::MatrixXcd x_grid;                    // N_t x N_c
  std::vector<SampleBuffer> antenna_waveforms;
  Eigen::VectorXd papr_per_antenna_db;
  double zf_residual = 0.0;                   // max_k ||H_k x_k - s_k||_inf
  std::vector<double> objective_trace;        // one entry per iterate
  std::vector<double> residual_trace;         // ZF residual per iterate
  int fft_size = 0;
  int cp_len = 0;
};

/// Recurrent (projected-gradient) optimizer settings.
struct RnnConfig {
  double step_size = 0.25;         // relative step along the scaled gradient
  int max_iters = 500;
  double clip_threshold_ratio = 0.89125;  // tau as a fraction of a_sat/G
  double tol = 1e-7;               // stop when objective decrease falls below
  int fft_size = 0;                // 0 -> n_subcarriers
  int cp_len = 0;
  double sample_rate_hz = 1.0;
};

/// Minimum-norm zero-forcing: x_k = H_k^H (H_k H_k^H)^-1 s_k per subcarrier.
/// s_grid is M_r x N_c. objective_trace is left empty.
PrecodeSolution zf_min_norm(const ChannelGrid& channel,
                            const Eigen::MatrixXcd& s_grid, int fft_size = 0,
                            int cp_len = 0, double sample_rate_hz = 1.0);

/// Orthogonal projection of x onto the affine set {x : H x = s}:
/// x - H^H (H H^H)^-1 (H x - s). Idempotent.
Eigen::VectorXcd project_affine_zf(const Eigen::VectorXcd& x,
                                   const Eigen::MatrixXcd& h,
                                   const Eigen::VectorXcd& s);

struct PeakPenaltyResult {
  double objective = 0.0;
  Eigen::MatrixXcd grad;  // dJ/dx* per (antenna, subcarrier), N_t x N_c
};

/// Smooth peak-power penalty J = sum_{a,t} max(0, |y_a(t)|^2 - tau^2)^2 over
/// single-symbol cyclic-prefix-free antenna waveforms (length fft_size each),
/// with the gradient mapped through the orthonormal OFDM modulation onto the
/// first n_subcarriers frequency bins. The gradient follows the Wirtinger
/// convention dJ/dx*, so dJ/dRe(x) = 2 Re(grad) and dJ/dIm(x) = 2 Im(grad).
PeakPenaltyResult peak_penalty(const std::vector<SampleBuffer>& antenna_waveforms,
                               double tau, int n_subcarriers);

/// Neurodynamic precoder: starts at the minimum-norm ZF point and descends
/// the peak penalty inside the ZF-feasible affine set (gradient step followed
/// by affine re-projection), recording the objective per iterate. The clip
/// threshold is cfg.clip_threshold_ratio * pa.a_sat / pa.gain.
PrecodeSolution rnn_precode(const ChannelGrid& channel,
                            const Eigen::MatrixXcd& s_grid,
                            const RnnConfig& cfg, const PaParams& pa);

/// Delivered Shannon bits over consumed PA energy, in Mbit/Joule, measured by
/// running the solution through measure_distortion and consumed_energy_j.
double energy_efficiency_mbit_per_j(const PrecodeSolution& solution,
                                    const ChannelGrid& channel,
                                    const PaParams& pa, double noise_snr_db,
                                    RngStream& rng);

/// Aggregate PAPR across antennas: global peak over global mean power.
double combined_papr_db(const std::vector<SampleBuffer>& waveforms);

struct EeSweepParams {
  int n_subcarriers = 128;
  int fft_size = 0;        // 0 -> n_subcarriers
  int cp_len = 0;
  double sample_rate_hz = 40e6;
  double ibo_db = 3.0;
  double noise_snr_db = 30.0;
  double pa_gain = 1.0;
  double pa_smoothness = 2.0;
  double pa_static_w = 0.0;
  RnnConfig rnn;
};

struct EeSweepRow {
  int n_t = 0;
  int m_r = 0;
  int trials = 0;
  double ee_zf_mbit_per_j = 0.0;
  double ee_rnn_mbit_per_j = 0.0;
  double papr_zf_db = 0.0;   // median over trials
  double papr_rnn_db = 0.0;  // median over trials
};

struct EeSweepResult {
  std::vector<EeSweepRow> rows;
  std::vector<std::string> warnings;  // skipped infeasible pairs
};

/// Sweeps every (n_t, m_r) pair, averaging zero-forcing vs neurodynamic
/// energy efficiency over `trials` seeded channel/symbol draws. Pairs with
/// n_t <= m_r are skipped with a warning record. Deterministic in `rng`.
EeSweepResult ee_sweep(const std::vector<int>& antenna_list,
                       const std::vector<int>& user_list,
                       const EeSweepParams& params, int trials,
                       const RngStream& rng);

}  // namespace airn
