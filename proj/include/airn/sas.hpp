#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "airn/dbn.hpp"
#include "airn/rng.hpp"
#include "airn/sample_buffer.hpp"

namespace airn {

inline constexpr int kFeatureDim = 256;
inline constexpr double kSasSampleRateHz = 40e6;
inline constexpr int kMinCaptureSamples = 2560;

enum class SignalClass : uint8_t { kNoise = 0, kWifi = 1, kLte = 2, kBoth = 3 };
inline constexpr int kNumSignalClasses = 4;

const char* to_string(SignalClass c);

/// One labeled training/evaluation example: normalized log-periodogram.
struct SpectrumFrame {
  Eigen::VectorXf features;  // kFeatureDim values in [0,1]
  SignalClass label = SignalClass::kNoise;
  float snr_db = 0.0f;
};

/// 802.11ac-like 20 MHz OFDM burst at 40 Msps: fft 128 (312.5 kHz spacing),
/// 56 active subcarriers, CP 32, QPSK payload, unit average power.
SampleBuffer synth_wifi(int n_symbols, RngStream& rng);

/// LTE-like 20 MHz OFDM burst at 40 Msps: fft 256 (156.25 kHz spacing),
/// 116 active subcarriers, CP 64, QPSK payload, unit average power.
SampleBuffer synth_lte(int n_symbols, RngStream& rng);

/// Baseband capture of a labeled scene. NOISE is unit-power complex Gaussian;
/// WIFI/LTE are the waveform through awgn at snr_db; BOTH sums both waveforms
/// (each at snr_db - 3 relative to the unit noise floor) plus the noise.
SampleBuffer synth_capture(SignalClass signal_class, double snr_db,
                           int duration_samples, RngStream& rng);

/// Welch-averaged log-periodogram: 256-point Hann segments at 50% overlap,
/// 10*log10, then per-frame min-max normalization to [0,1]. Output bin i is
/// DFT bin i (no spectrum shift). Degenerate all-equal spectra map to zeros.
Eigen::VectorXd extract_features(const SampleBuffer& buf);

struct DatasetManifestRow {
  SignalClass signal_class;
  double snr_db;
  int count;
  std::string split;  // "train" or "test"
};

struct Dataset {
  std::vector<SpectrumFrame> train;
  std::vector<SpectrumFrame> test;
  std::vector<DatasetManifestRow> manifest;
};

/// frames_per_cell frames for every (class, snr) cell, split 80/20 per cell
/// with membership drawn deterministically from rng.
Dataset build_dataset(const std::vector<double>& snr_grid, int frames_per_cell,
                      const RngStream& rng,
                      int frame_samples = 2 * kMinCaptureSamples);

/// Feature matrix (one row per frame, widened to double) plus labels.
std::pair<Eigen::MatrixXd, std::vector<int>> to_matrix(
    const std::vector<SpectrumFrame>& frames);

/// extract_features then classify; returns the argmax class and the full
/// probability vector.
std::pair<SignalClass, Eigen::VectorXd> detect(const DbnClassifier& model,
                                               const SampleBuffer& buf);

struct CarrierPolicy {
  int carrier_index = 0;
  double center_hz = 0.0;
  double bandwidth_hz = 0.0;
  bool incumbent_protected = false;
  double max_power_dbm = 0.0;
};

struct McsThreshold {
  int mcs_index = 0;     // 0..9
  double min_snr_db = 0.0;
};

struct PolicyTable {
  std::vector<CarrierPolicy> carriers;    // non-overlapping
  std::vector<McsThreshold> thresholds;   // strictly increasing in both fields
};

/// Sentinel values used when access_granted is false.
struct SpectrumDecision {
  bool access_granted = false;
  int carrier_index = -1;
  double bandwidth_hz = 0.0;
  int mcs_index = -1;
  double tx_power_dbm = -999.0;
};

/// Grants the lowest-index carrier that is NOISE and not incumbent-protected,
/// at the highest MCS whose threshold the link SNR meets and the carrier's
/// power cap. No free carrier, or a link too poor for every MCS, denies
/// access with sentinel fields.
SpectrumDecision decide_spectrum(const std::vector<SignalClass>& occupancy,
                                 const PolicyTable& policy,
                                 double link_snr_db);

}  // namespace airn
