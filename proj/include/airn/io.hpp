#pragma once

#include <string>
#include <vector>

#include "airn/dbn.hpp"
#include "airn/sample_buffer.hpp"
#include "airn/sas.hpp"

namespace airn {

// All binary artifacts share a little-endian header: magic "AIRN",
// u16 version, u16 kind. Kinds: 1 = sample buffer, 2 = model, 3 = dataset.

/// kind=1: header + u64 sample count, then (f32 I, f32 Q) pairs. The sample
/// rate lives in the experiment config, not the file.
void save_sample_buffer(const std::string& path, const SampleBuffer& buf);
SampleBuffer load_sample_buffer(const std::string& path,
                                double sample_rate_hz);

/// kind=2: u32 rbm layer count, u32 class count, u32 layer sizes (visible
/// first), then per RBM the row-major f64 weight matrix, visible bias and
/// hidden bias, and the softmax head (row-major weights, bias) last.
void save_model(const std::string& path, const DbnClassifier& model);
DbnClassifier load_model(const std::string& path);

/// kind=3: u32 frame count, u16 feature dim, then per frame the f32
/// features, u8 label and f32 snr_db.
void save_dataset(const std::string& path,
                  const std::vector<SpectrumFrame>& frames);
std::vector<SpectrumFrame> load_dataset(const std::string& path);

/// Key-value policy file: one record per line,
///   carrier <index> <center_hz> <bandwidth_hz> <protected 0|1> <max_power_dbm>
///   mcs <index> <min_snr_db>
/// '#' starts a comment. Carriers must not overlap; MCS thresholds must be
/// strictly increasing in both index and SNR.
PolicyTable load_policy(const std::string& path);

/// Shortest round-trippable decimal at 9 significant digits ("%.9g").
std::string format_g9(double value);

}  // namespace airn
