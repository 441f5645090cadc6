#pragma once

#include <Eigen/Dense>

namespace airn {

/// Complex baseband waveform. Samples are dimensionless amplitudes on a
/// 1-ohm reference; power is |x|^2.
struct SampleBuffer {
  Eigen::VectorXcd samples;
  double sample_rate_hz = 1.0;

  Eigen::Index size() const { return samples.size(); }
};

/// Mean per-sample power E|x|^2. Empty buffer -> throws.
double mean_power(const SampleBuffer& buf);

/// Peak-to-average power ratio, 10*log10(max|x|^2 / mean|x|^2).
/// All-zero buffer has no defined ratio and throws.
double papr_db(const SampleBuffer& buf);

}  // namespace airn
