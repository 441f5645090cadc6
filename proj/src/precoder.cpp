#include "airn/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "airn/fft.hpp"

namespace airn {

namespace {

// Cached per-subcarrier factorizations of H_k H_k^H for repeated projections.
class ZfProjector {
 public:
  explicit ZfProjector(const ChannelGrid& channel) : channel_(channel) {
    llt_.reserve(channel.h.size());
    for (size_t k = 0; k < channel.h.size(); ++k) {
      const Eigen::MatrixXcd& hk = channel.h[k];
      Eigen::LLT<Eigen::MatrixXcd> llt(hk * hk.adjoint());
      if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("zf: rank-deficient channel at subcarrier " +
                                    std::to_string(k));
      }
      llt_.push_back(std::move(llt));
    }
  }

  Eigen::VectorXcd min_norm(size_t k, const Eigen::VectorXcd& s) const {
    return channel_.h[k].adjoint() * llt_[k].solve(s);
  }

  // Projects columns of x_grid onto {x : H_k x = s_k} in place and returns
  // the post-projection residual max_k ||H_k x_k - s_k||_inf.
  double project(Eigen::MatrixXcd& x_grid, const Eigen::MatrixXcd& s_grid) const {
    double residual = 0.0;
    for (size_t k = 0; k < channel_.h.size(); ++k) {
      const Eigen::MatrixXcd& hk = channel_.h[k];
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      x_grid.col(kk) -=
          hk.adjoint() * llt_[k].solve(hk * x_grid.col(kk) - s_grid.col(kk));
      residual = std::max(
          residual,
          (hk * x_grid.col(kk) - s_grid.col(kk)).cwiseAbs().maxCoeff());
    }
    return residual;
  }

 private:
  const ChannelGrid& channel_;
  std::vector<Eigen::LLT<Eigen::MatrixXcd>> llt_;
};

void check_dimensions(const ChannelGrid& channel,
                      const Eigen::MatrixXcd& s_grid) {
  if (channel.h.empty()) {
    throw std::invalid_argument("precoder: empty channel grid");
  }
  if (s_grid.rows() != channel.m_users() ||
      s_grid.cols() != channel.n_subcarriers()) {
    throw std::invalid_argument("precoder: s_grid shape must be M_r x N_c");
  }
  if (channel.n_antennas() < channel.m_users()) {
    throw std::invalid_argument("precoder: fewer antennas than users");
  }
}

double residual_of(const ChannelGrid& channel, const Eigen::MatrixXcd& x_grid,
                   const Eigen::MatrixXcd& s_grid) {
  double residual = 0.0;
  for (int k = 0; k < channel.n_subcarriers(); ++k) {
    residual = std::max(residual, (channel.h[static_cast<size_t>(k)] * x_grid.col(k) -
                                   s_grid.col(k))
                                      .cwiseAbs()
                                      .maxCoeff());
  }
  return residual;
}

std::vector<SampleBuffer> antenna_waveforms_of(const Eigen::MatrixXcd& x_grid,
                                               int fft_size, int cp_len,
                                               double sample_rate_hz) {
  std::vector<SampleBuffer> waveforms;
  waveforms.reserve(static_cast<size_t>(x_grid.rows()));
  std::vector<int> bins(static_cast<size_t>(x_grid.cols()));
  for (size_t k = 0; k < bins.size(); ++k) bins[k] = static_cast<int>(k);
  for (Eigen::Index a = 0; a < x_grid.rows(); ++a) {
    SymbolGrid grid{x_grid.row(a).transpose(), bins};
    waveforms.push_back(ofdm_modulate(grid, fft_size, cp_len, sample_rate_hz));
  }
  return waveforms;
}

PrecodeSolution build_solution(const ChannelGrid& channel,
                               const Eigen::MatrixXcd& x_grid,
                               const Eigen::MatrixXcd& s_grid, int fft_size,
                               int cp_len, double sample_rate_hz) {
  PrecodeSolution sol;
  sol.x_grid = x_grid;
  sol.fft_size = fft_size;
  sol.cp_len = cp_len;
  sol.antenna_waveforms =
      antenna_waveforms_of(x_grid, fft_size, cp_len, sample_rate_hz);
  sol.papr_per_antenna_db.resize(x_grid.rows());
  for (Eigen::Index a = 0; a < x_grid.rows(); ++a) {
    const SampleBuffer& w = sol.antenna_waveforms[static_cast<size_t>(a)];
    // A silent antenna has no defined peak-to-average ratio.
    sol.papr_per_antenna_db[a] =
        w.samples.cwiseAbs2().maxCoeff() == 0.0
            ? std::numeric_limits<double>::quiet_NaN()
            : papr_db(w);
  }
  sol.zf_residual = residual_of(channel, x_grid, s_grid);
  return sol;
}

int resolve_fft_size(int fft_size, int n_subcarriers) {
  if (fft_size == 0) {
    if (!detail::is_power_of_two(n_subcarriers)) {
      throw std::invalid_argument(
          "precoder: default fft size requires power-of-two subcarrier count");
    }
    return n_subcarriers;
  }
  return fft_size;
}

}  // namespace

PrecodeSolution zf_min_norm(const ChannelGrid& channel,
                            const Eigen::MatrixXcd& s_grid, int fft_size,
                            int cp_len, double sample_rate_hz) {
  check_dimensions(channel, s_grid);
  fft_size = resolve_fft_size(fft_size, channel.n_subcarriers());
  ZfProjector projector(channel);
  Eigen::MatrixXcd x_grid(channel.n_antennas(), channel.n_subcarriers());
  for (int k = 0; k < channel.n_subcarriers(); ++k) {
    x_grid.col(k) = projector.min_norm(static_cast<size_t>(k), s_grid.col(k));
  }
  return build_solution(channel, x_grid, s_grid, fft_size, cp_len,
                        sample_rate_hz);
}

Eigen::VectorXcd project_affine_zf(const Eigen::VectorXcd& x,
                                   const Eigen::MatrixXcd& h,
                                   const Eigen::VectorXcd& s) {
  if (h.cols() != x.size() || h.rows() != s.size()) {
    throw std::invalid_argument("project_affine_zf: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(h * h.adjoint());
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("project_affine_zf: rank-deficient channel");
  }
  return x - h.adjoint() * llt.solve(h * x - s);
}

PeakPenaltyResult peak_penalty(const std::vector<SampleBuffer>& antenna_waveforms,
                               double tau, int n_subcarriers) {
  if (tau <= 0.0) {
    throw std::invalid_argument("peak_penalty: threshold must be positive");
  }
  if (antenna_waveforms.empty()) {
    throw std::invalid_argument("peak_penalty: no waveforms");
  }
  const Eigen::Index t_len = antenna_waveforms.front().samples.size();
  const double tau2 = tau * tau;
  PeakPenaltyResult result;
  result.grad.resize(static_cast<Eigen::Index>(antenna_waveforms.size()),
                     n_subcarriers);
  Eigen::VectorXcd g_time(t_len);
  for (size_t a = 0; a < antenna_waveforms.size(); ++a) {
    const Eigen::VectorXcd& y = antenna_waveforms[a].samples;
    if (y.size() != t_len) {
      throw std::invalid_argument("peak_penalty: waveform length mismatch");
    }
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const double excess = std::norm(y[t]) - tau2;
      if (excess > 0.0) {
        result.objective += excess * excess;
        g_time[t] = 2.0 * excess * y[t];
      } else {
        g_time[t] = {0.0, 0.0};
      }
    }
    result.grad.row(static_cast<Eigen::Index>(a)) =
        detail::dft_orthonormal(g_time).head(n_subcarriers).transpose();
  }
  return result;
}

PrecodeSolution rnn_precode(const ChannelGrid& channel,
                            const Eigen::MatrixXcd& s_grid,
                            const RnnConfig& cfg, const PaParams& pa) {
  check_dimensions(channel, s_grid);
  if (channel.n_antennas() <= channel.m_users()) {
    throw std::invalid_argument("rnn_precode: no excess degrees of freedom");
  }
  if (cfg.step_size <= 0.0 || cfg.max_iters < 1 || cfg.tol <= 0.0 ||
      cfg.clip_threshold_ratio <= 0.0 || cfg.clip_threshold_ratio > 1.0) {
    throw std::invalid_argument("rnn_precode: invalid config");
  }
  const int fft_size = resolve_fft_size(cfg.fft_size, channel.n_subcarriers());
  const int n_c = channel.n_subcarriers();
  const double tau = cfg.clip_threshold_ratio * pa.a_sat / pa.gain;

  ZfProjector projector(channel);
  Eigen::MatrixXcd x(channel.n_antennas(), n_c);
  for (int k = 0; k < n_c; ++k) {
    x.col(k) = projector.min_norm(static_cast<size_t>(k), s_grid.col(k));
  }

  // The penalty is evaluated on CP-free single-symbol waveforms; the cyclic
  // prefix repeats body samples and cannot change the peak.
  auto waveforms_of = [&](const Eigen::MatrixXcd& xg) {
    return antenna_waveforms_of(xg, fft_size, 0, cfg.sample_rate_hz);
  };

  std::vector<SampleBuffer> waveforms = waveforms_of(x);
  PeakPenaltyResult pp = peak_penalty(waveforms, tau, n_c);
  const double initial_papr = combined_papr_db(waveforms);

  std::vector<double> objective_trace{pp.objective};
  std::vector<double> residual_trace{residual_of(channel, x, s_grid)};
  const Eigen::MatrixXcd x_initial = x;

  constexpr int kMaxBacktracks = 30;
  constexpr int kMaxBadIters = 5;
  int bad_iters = 0;
  for (int iter = 0; iter < cfg.max_iters && pp.objective > 0.0; ++iter) {
    const double grad_norm = pp.grad.norm();
    if (grad_norm == 0.0) break;
    // Scale-free base step: move a step_size fraction of the solution norm
    // along the gradient direction.
    const double base_step = cfg.step_size * x.norm() / grad_norm;

    Eigen::MatrixXcd x_cand;
    PeakPenaltyResult pp_cand;
    double res_cand = 0.0;
    bool accepted = false;
    double step = base_step;
    for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= 0.5) {
      x_cand = x - step * pp.grad;
      res_cand = projector.project(x_cand, s_grid);
      pp_cand = peak_penalty(waveforms_of(x_cand), tau, n_c);
      // Tiny relative slack absorbs re-projection rounding noise.
      if (pp_cand.objective <= pp.objective * (1.0 + 1e-12)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (++bad_iters >= kMaxBadIters) {
        throw std::runtime_error(
            "rnn_precode: objective kept increasing for " +
            std::to_string(kMaxBadIters) +
            " consecutive iterations; use a smaller step_size");
      }
      continue;  // retry from the same point with a fresh gradient scale
    }
    bad_iters = 0;
    const double decrease = pp.objective - pp_cand.objective;
    x = std::move(x_cand);
    pp.objective = std::min(pp.objective, pp_cand.objective);
    pp.grad = std::move(pp_cand.grad);
    objective_trace.push_back(pp.objective);
    residual_trace.push_back(res_cand);
    if (decrease < cfg.tol) break;
  }

  // The peak objective is a proxy for PAPR; if the trade happened to raise
  // the aggregate PAPR, fall back to the starting point.
  if (combined_papr_db(waveforms_of(x)) > initial_papr + 1e-9) {
    x = x_initial;
    objective_trace.resize(1);
    residual_trace.resize(1);
  }

  PrecodeSolution sol = build_solution(channel, x, s_grid, fft_size,
                                       cfg.cp_len, cfg.sample_rate_hz);
  sol.objective_trace = std::move(objective_trace);
  sol.residual_trace = std::move(residual_trace);
  return sol;
}

double combined_papr_db(const std::vector<SampleBuffer>& waveforms) {
  if (waveforms.empty()) {
    throw std::invalid_argument("combined_papr_db: no waveforms");
  }
  double peak = 0.0, sum = 0.0;
  Eigen::Index count = 0;
  for (const auto& w : waveforms) {
    if (w.samples.size() == 0) continue;
    peak = std::max(peak, w.samples.cwiseAbs2().maxCoeff());
    sum += w.samples.squaredNorm();
    count += w.samples.size();
  }
  if (count == 0 || peak == 0.0) {
    throw std::invalid_argument("combined_papr_db: all-zero waveforms");
  }
  return 10.0 * std::log10(peak / (sum / static_cast<double>(count)));
}

double energy_efficiency_mbit_per_j(const PrecodeSolution& solution,
                                    const ChannelGrid& channel,
                                    const PaParams& pa, double noise_snr_db,
                                    RngStream& rng) {
  const Eigen::Index n_ant = solution.x_grid.rows();
  const int n_c = static_cast<int>(solution.x_grid.cols());
  if (n_ant != channel.n_antennas() || n_c != channel.n_subcarriers()) {
    throw std::invalid_argument("energy_efficiency: dimension mismatch");
  }
  std::vector<int> bins(static_cast<size_t>(n_c));
  for (size_t k = 0; k < bins.size(); ++k) bins[k] = static_cast<int>(k);
  std::vector<SymbolGrid> tx_grids;
  tx_grids.reserve(static_cast<size_t>(n_ant));
  for (Eigen::Index a = 0; a < n_ant; ++a) {
    tx_grids.push_back(SymbolGrid{solution.x_grid.row(a).transpose(), bins});
  }
  const DistortionReport report =
      measure_distortion(tx_grids, channel, pa, noise_snr_db, rng,
                         solution.fft_size, solution.cp_len);
  double bits = 0.0;
  for (Eigen::Index u = 0; u < report.per_user_sinr.size(); ++u) {
    bits += static_cast<double>(n_c) *
            std::log2(1.0 + report.per_user_sinr[u]);
  }
  double energy = 0.0;
  for (const auto& w : solution.antenna_waveforms) {
    energy += consumed_energy_j(w, pa);
  }
  if (energy <= 0.0) {
    throw std::invalid_argument("energy_efficiency: zero consumed power");
  }
  return bits / energy / 1e6;
}

EeSweepResult ee_sweep(const std::vector<int>& antenna_list,
                       const std::vector<int>& user_list,
                       const EeSweepParams& params, int trials,
                       const RngStream& rng) {
  if (trials < 1) {
    throw std::invalid_argument("ee_sweep: trials must be >= 1");
  }
  EeSweepResult result;
  uint64_t pair_key = 0;
  for (int m_r : user_list) {
    for (int n_t : antenna_list) {
      ++pair_key;
      if (n_t <= m_r) {
        result.warnings.push_back("skipped infeasible pair n_t=" +
                                  std::to_string(n_t) +
                                  " m_r=" + std::to_string(m_r));
        continue;
      }
      EeSweepRow row;
      row.n_t = n_t;
      row.m_r = m_r;
      row.trials = trials;
      std::vector<double> papr_zf(static_cast<size_t>(trials));
      std::vector<double> papr_rnn(static_cast<size_t>(trials));
      for (int t = 0; t < trials; ++t) {
        RngStream cell = rng.substream(pair_key).substream(static_cast<uint64_t>(t));
        RngStream rng_channel = cell.substream(1);
        RngStream rng_bits = cell.substream(2);

        const ChannelGrid channel =
            gen_channel(m_r, n_t, params.n_subcarriers, rng_channel);
        std::vector<uint8_t> bits(
            static_cast<size_t>(2 * m_r * params.n_subcarriers));
        for (auto& b : bits) b = static_cast<uint8_t>(rng_bits.next_u64() & 1);
        const Eigen::VectorXcd syms = qpsk_map(bits);
        Eigen::MatrixXcd s_grid =
            Eigen::Map<const Eigen::MatrixXcd>(syms.data(), m_r,
                                               params.n_subcarriers);

        PrecodeSolution zf =
            zf_min_norm(channel, s_grid, params.fft_size, params.cp_len,
                        params.sample_rate_hz);
        double power_sum = 0.0;
        Eigen::Index sample_count = 0;
        for (const auto& w : zf.antenna_waveforms) {
          power_sum += w.samples.squaredNorm();
          sample_count += w.samples.size();
        }
        const PaParams pa = pa_from_backoff(
            power_sum / static_cast<double>(sample_count), params.ibo_db,
            params.pa_gain, params.pa_smoothness, params.pa_static_w);

        RnnConfig cfg = params.rnn;
        cfg.fft_size = params.fft_size;
        cfg.cp_len = params.cp_len;
        cfg.sample_rate_hz = params.sample_rate_hz;
        PrecodeSolution rnn = rnn_precode(channel, s_grid, cfg, pa);

        // Same noise stream instance for both solutions keeps the
        // comparison paired.
        RngStream rng_noise_zf = cell.substream(3);
        RngStream rng_noise_rnn = cell.substream(3);
        row.ee_zf_mbit_per_j += energy_efficiency_mbit_per_j(
            zf, channel, pa, params.noise_snr_db, rng_noise_zf);
        row.ee_rnn_mbit_per_j += energy_efficiency_mbit_per_j(
            rnn, channel, pa, params.noise_snr_db, rng_noise_rnn);
        papr_zf[static_cast<size_t>(t)] = combined_papr_db(zf.antenna_waveforms);
        papr_rnn[static_cast<size_t>(t)] = combined_papr_db(rnn.antenna_waveforms);
      }
      row.ee_zf_mbit_per_j /= trials;
      row.ee_rnn_mbit_per_j /= trials;
      auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
      };
      row.papr_zf_db = median(papr_zf);
      row.papr_rnn_db = median(papr_rnn);
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace airn
