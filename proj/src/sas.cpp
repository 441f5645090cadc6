#include "airn/sas.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "airn/fft.hpp"
#include "airn/waveform.hpp"

namespace airn {

namespace {

struct OfdmNumerology {
  int fft_size;
  int cp_len;
  int half_span;  // active bins are +-1..half_span around DC
};

constexpr OfdmNumerology kWifi{128, 32, 28};   // 56 active, 312.5 kHz spacing
constexpr OfdmNumerology kLte{256, 64, 58};    // 116 active, 156.25 kHz spacing

SampleBuffer synth_ofdm(const OfdmNumerology& num, int n_symbols,
                        RngStream& rng) {
  if (n_symbols < 1) {
    throw std::invalid_argument("synth: n_symbols must be >= 1");
  }
  const int n_active = 2 * num.half_span;
  std::vector<int> bins;
  bins.reserve(static_cast<size_t>(n_active));
  for (int k = 1; k <= num.half_span; ++k) bins.push_back(k);
  for (int k = num.fft_size - num.half_span; k < num.fft_size; ++k) {
    bins.push_back(k);
  }
  std::sort(bins.begin(), bins.end());

  std::vector<uint8_t> payload(
      static_cast<size_t>(2 * n_active * n_symbols));
  for (auto& b : payload) b = static_cast<uint8_t>(rng.next_u64() & 1);
  const Eigen::VectorXcd syms = qpsk_map(payload);

  // Unit-modulus QPSK on n_active of fft_size bins gives per-sample power
  // n_active/fft_size after the orthonormal IDFT; rescale to exactly 1.
  const double scale =
      std::sqrt(static_cast<double>(num.fft_size) / n_active);
  SymbolGrid grid;
  grid.symbols = Eigen::MatrixXcd::Zero(num.fft_size, n_symbols);
  grid.active_bins = bins;
  Eigen::Index s = 0;
  for (int m = 0; m < n_symbols; ++m) {
    for (int k : bins) grid.symbols(k, m) = scale * syms[s++];
  }
  return ofdm_modulate(grid, num.fft_size, num.cp_len, kSasSampleRateHz);
}

SampleBuffer truncated_signal(const OfdmNumerology& num, int duration_samples,
                              RngStream& rng) {
  const int sym_len = num.fft_size + num.cp_len;
  const int n_symbols = (duration_samples + sym_len - 1) / sym_len;
  SampleBuffer buf = synth_ofdm(num, n_symbols, rng);
  buf.samples.conservativeResize(duration_samples);
  return buf;
}

}  // namespace

const char* to_string(SignalClass c) {
  switch (c) {
    case SignalClass::kNoise: return "NOISE";
    case SignalClass::kWifi: return "WIFI";
    case SignalClass::kLte: return "LTE";
    case SignalClass::kBoth: return "BOTH";
  }
  return "?";
}

SampleBuffer synth_wifi(int n_symbols, RngStream& rng) {
  return synth_ofdm(kWifi, n_symbols, rng);
}

SampleBuffer synth_lte(int n_symbols, RngStream& rng) {
  return synth_ofdm(kLte, n_symbols, rng);
}

SampleBuffer synth_capture(SignalClass signal_class, double snr_db,
                           int duration_samples, RngStream& rng) {
  if (duration_samples < kMinCaptureSamples) {
    throw std::invalid_argument("synth_capture: duration must be >= " +
                                std::to_string(kMinCaptureSamples) +
                                " samples");
  }
  SampleBuffer buf;
  buf.sample_rate_hz = kSasSampleRateHz;
  switch (signal_class) {
    case SignalClass::kNoise: {
      buf.samples.resize(duration_samples);
      for (Eigen::Index i = 0; i < buf.samples.size(); ++i) {
        buf.samples[i] = rng.next_cgaussian(1.0);
      }
      return buf;
    }
    case SignalClass::kWifi:
      return awgn(truncated_signal(kWifi, duration_samples, rng), snr_db, rng);
    case SignalClass::kLte:
      return awgn(truncated_signal(kLte, duration_samples, rng), snr_db, rng);
    case SignalClass::kBoth: {
      const double amp = std::pow(10.0, (snr_db - 3.0) / 20.0);
      const SampleBuffer wifi = truncated_signal(kWifi, duration_samples, rng);
      const SampleBuffer lte = truncated_signal(kLte, duration_samples, rng);
      buf.samples = amp * wifi.samples + amp * lte.samples;
      for (Eigen::Index i = 0; i < buf.samples.size(); ++i) {
        buf.samples[i] += rng.next_cgaussian(1.0);
      }
      return buf;
    }
  }
  throw std::invalid_argument("synth_capture: unknown class");
}

Eigen::VectorXd extract_features(const SampleBuffer& buf) {
  constexpr int kSegment = kFeatureDim;
  constexpr int kHop = kSegment / 2;
  if (buf.samples.size() < kMinCaptureSamples) {
    throw std::invalid_argument("extract_features: buffer shorter than " +
                                std::to_string(kMinCaptureSamples) +
                                " samples");
  }
  Eigen::VectorXd window(kSegment);
  for (int n = 0; n < kSegment; ++n) {
    window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / kSegment));
  }
  Eigen::VectorXd psd = Eigen::VectorXd::Zero(kSegment);
  Eigen::VectorXcd chunk(kSegment);
  int n_segments = 0;
  for (Eigen::Index start = 0; start + kSegment <= buf.samples.size();
       start += kHop) {
    chunk = buf.samples.segment(start, kSegment).cwiseProduct(
        window.cast<std::complex<double>>());
    psd += detail::dft_orthonormal(chunk).cwiseAbs2();
    ++n_segments;
  }
  psd /= n_segments;

  const double peak = psd.maxCoeff();
  Eigen::VectorXd features = Eigen::VectorXd::Zero(kSegment);
  if (peak <= 0.0) return features;
  // Floor keeps the log finite and the features gain-invariant.
  const double floor = peak * 1e-12;
  Eigen::VectorXd db =
      psd.cwiseMax(floor).unaryExpr([](double p) { return 10.0 * std::log10(p); });
  const double lo = db.minCoeff();
  const double hi = db.maxCoeff();
  if (hi - lo <= 0.0) return features;
  features = (db.array() - lo) / (hi - lo);
  return features;
}

Dataset build_dataset(const std::vector<double>& snr_grid, int frames_per_cell,
                      const RngStream& rng, int frame_samples) {
  if (snr_grid.empty()) {
    throw std::invalid_argument("build_dataset: empty SNR grid");
  }
  if (frames_per_cell < 1) {
    throw std::invalid_argument("build_dataset: frames_per_cell must be >= 1");
  }
  Dataset ds;
  const int n_test = frames_per_cell / 5;  // 80/20 split per cell
  for (int c = 0; c < kNumSignalClasses; ++c) {
    for (size_t si = 0; si < snr_grid.size(); ++si) {
      const auto signal_class = static_cast<SignalClass>(c);
      const double snr_db = snr_grid[si];
      RngStream cell = rng.substream(static_cast<uint64_t>(c))
                           .substream(static_cast<uint64_t>(si));

      std::vector<SpectrumFrame> frames;
      frames.reserve(static_cast<size_t>(frames_per_cell));
      for (int f = 0; f < frames_per_cell; ++f) {
        RngStream frame_rng = cell.substream(static_cast<uint64_t>(f));
        const SampleBuffer capture =
            synth_capture(signal_class, snr_db, frame_samples, frame_rng);
        SpectrumFrame frame;
        frame.features = extract_features(capture).cast<float>();
        frame.label = signal_class;
        frame.snr_db = static_cast<float>(snr_db);
        frames.push_back(std::move(frame));
      }

      // Deterministic split membership: shuffle indices, last fifth is test.
      std::vector<int> order(static_cast<size_t>(frames_per_cell));
      for (int f = 0; f < frames_per_cell; ++f) order[static_cast<size_t>(f)] = f;
      RngStream split_rng = cell.substream(0x51707ULL);
      for (size_t i = order.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(split_rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
      }
      for (int f = 0; f < frames_per_cell; ++f) {
        auto& dest = f < frames_per_cell - n_test ? ds.train : ds.test;
        dest.push_back(frames[static_cast<size_t>(order[static_cast<size_t>(f)])]);
      }
      ds.manifest.push_back({signal_class, snr_db, frames_per_cell - n_test,
                             "train"});
      ds.manifest.push_back({signal_class, snr_db, n_test, "test"});
    }
  }
  return ds;
}

std::pair<Eigen::MatrixXd, std::vector<int>> to_matrix(
    const std::vector<SpectrumFrame>& frames) {
  Eigen::MatrixXd data(static_cast<Eigen::Index>(frames.size()), kFeatureDim);
  std::vector<int> labels(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    data.row(static_cast<Eigen::Index>(i)) =
        frames[i].features.cast<double>().transpose();
    labels[i] = static_cast<int>(frames[i].label);
  }
  return {std::move(data), std::move(labels)};
}

std::pair<SignalClass, Eigen::VectorXd> detect(const DbnClassifier& model,
                                               const SampleBuffer& buf) {
  if (model.layers.empty() ||
      model.layers.front().n_visible() != kFeatureDim) {
    throw std::invalid_argument("detect: model visible dimension must be " +
                                std::to_string(kFeatureDim));
  }
  const Eigen::VectorXd probs = predict(model, extract_features(buf));
  Eigen::Index arg = 0;
  probs.maxCoeff(&arg);
  return {static_cast<SignalClass>(arg), probs};
}

SpectrumDecision decide_spectrum(const std::vector<SignalClass>& occupancy,
                                 const PolicyTable& policy,
                                 double link_snr_db) {
  if (policy.carriers.empty()) {
    throw std::invalid_argument("decide_spectrum: empty policy table");
  }
  if (occupancy.size() != policy.carriers.size()) {
    throw std::invalid_argument(
        "decide_spectrum: occupancy must cover all policy carriers");
  }
  SpectrumDecision decision;

  int mcs = -1;
  for (const McsThreshold& t : policy.thresholds) {
    if (t.min_snr_db <= link_snr_db) mcs = t.mcs_index;
  }
  if (mcs < 0) return decision;  // link cannot support any MCS

  // Scan carriers by ascending index.
  std::vector<size_t> order(policy.carriers.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return policy.carriers[a].carrier_index < policy.carriers[b].carrier_index;
  });
  for (size_t i : order) {
    const CarrierPolicy& carrier = policy.carriers[i];
    if (carrier.incumbent_protected) continue;
    if (occupancy[i] != SignalClass::kNoise) continue;
    decision.access_granted = true;
    decision.carrier_index = carrier.carrier_index;
    decision.bandwidth_hz = carrier.bandwidth_hz;
    decision.mcs_index = mcs;
    decision.tx_power_dbm = carrier.max_power_dbm;
    return decision;
  }
  return decision;
}

}  // namespace airn
