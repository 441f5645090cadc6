#include "airn/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace airn {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian");

namespace {

constexpr char kMagic[4] = {'A', 'I', 'R', 'N'};
constexpr uint16_t kVersion = 1;

enum Kind : uint16_t { kKindSamples = 1, kKindModel = 2, kKindDataset = 3 };

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("io: truncated file");
  return value;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("io: cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("io: cannot open " + path);
  return is;
}

void write_header(std::ostream& os, uint16_t kind) {
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, kind);
}

void read_header(std::istream& is, uint16_t expected_kind,
                 const std::string& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("io: " + path + " is not an AIRN file");
  }
  const auto version = read_pod<uint16_t>(is);
  if (version != kVersion) {
    throw std::runtime_error("io: " + path + " has unsupported version " +
                             std::to_string(version));
  }
  const auto kind = read_pod<uint16_t>(is);
  if (kind != expected_kind) {
    throw std::runtime_error("io: " + path + " has kind " +
                             std::to_string(kind) + ", expected " +
                             std::to_string(expected_kind));
  }
}

void write_matrix_row_major(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      write_pod(os, m(r, c));
    }
  }
}

Eigen::MatrixXd read_matrix_row_major(std::istream& is, Eigen::Index rows,
                                      Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = read_pod<double>(is);
    }
  }
  return m;
}

Eigen::VectorXd read_vector(std::istream& is, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_pod<double>(is);
  return v;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_pod(os, v[i]);
}

}  // namespace

void save_sample_buffer(const std::string& path, const SampleBuffer& buf) {
  std::ofstream os = open_out(path);
  write_header(os, kKindSamples);
  write_pod(os, static_cast<uint64_t>(buf.samples.size()));
  for (Eigen::Index i = 0; i < buf.samples.size(); ++i) {
    write_pod(os, static_cast<float>(buf.samples[i].real()));
    write_pod(os, static_cast<float>(buf.samples[i].imag()));
  }
  if (!os) throw std::runtime_error("io: write failed for " + path);
}

SampleBuffer load_sample_buffer(const std::string& path,
                                double sample_rate_hz) {
  std::ifstream is = open_in(path);
  read_header(is, kKindSamples, path);
  const auto count = read_pod<uint64_t>(is);
  SampleBuffer buf;
  buf.sample_rate_hz = sample_rate_hz;
  buf.samples.resize(static_cast<Eigen::Index>(count));
  for (uint64_t i = 0; i < count; ++i) {
    const float re = read_pod<float>(is);
    const float im = read_pod<float>(is);
    buf.samples[static_cast<Eigen::Index>(i)] = {re, im};
  }
  return buf;
}

void save_model(const std::string& path, const DbnClassifier& model) {
  if (model.layers.empty()) {
    throw std::invalid_argument("save_model: model has no layers");
  }
  std::ofstream os = open_out(path);
  write_header(os, kKindModel);
  write_pod(os, static_cast<uint32_t>(model.layers.size()));
  write_pod(os, static_cast<uint32_t>(model.n_classes));
  for (int size : model.layer_sizes) {
    write_pod(os, static_cast<uint32_t>(size));
  }
  for (const Rbm& rbm : model.layers) {
    write_matrix_row_major(os, rbm.w);
    write_vector(os, rbm.b_visible);
    write_vector(os, rbm.b_hidden);
  }
  write_matrix_row_major(os, model.head_w);
  write_vector(os, model.head_b);
  if (!os) throw std::runtime_error("io: write failed for " + path);
}

DbnClassifier load_model(const std::string& path) {
  std::ifstream is = open_in(path);
  read_header(is, kKindModel, path);
  const auto n_layers = read_pod<uint32_t>(is);
  const auto n_classes = read_pod<uint32_t>(is);
  if (n_layers == 0 || n_layers > 64) {
    throw std::runtime_error("io: " + path + " has implausible layer count");
  }
  DbnClassifier model;
  model.n_classes = static_cast<int>(n_classes);
  model.layer_sizes.resize(n_layers + 1);
  for (auto& size : model.layer_sizes) {
    size = static_cast<int>(read_pod<uint32_t>(is));
  }
  model.layers.resize(n_layers);
  for (uint32_t l = 0; l < n_layers; ++l) {
    const Eigen::Index nv = model.layer_sizes[l];
    const Eigen::Index nh = model.layer_sizes[l + 1];
    model.layers[l].w = read_matrix_row_major(is, nv, nh);
    model.layers[l].b_visible = read_vector(is, nv);
    model.layers[l].b_hidden = read_vector(is, nh);
  }
  model.head_w = read_matrix_row_major(is, model.layer_sizes.back(),
                                       model.n_classes);
  model.head_b = read_vector(is, model.n_classes);
  return model;
}

void save_dataset(const std::string& path,
                  const std::vector<SpectrumFrame>& frames) {
  std::ofstream os = open_out(path);
  write_header(os, kKindDataset);
  write_pod(os, static_cast<uint32_t>(frames.size()));
  write_pod(os, static_cast<uint16_t>(kFeatureDim));
  for (const SpectrumFrame& frame : frames) {
    if (frame.features.size() != kFeatureDim) {
      throw std::invalid_argument("save_dataset: bad feature dimension");
    }
    for (Eigen::Index i = 0; i < frame.features.size(); ++i) {
      write_pod(os, frame.features[i]);
    }
    write_pod(os, static_cast<uint8_t>(frame.label));
    write_pod(os, frame.snr_db);
  }
  if (!os) throw std::runtime_error("io: write failed for " + path);
}

std::vector<SpectrumFrame> load_dataset(const std::string& path) {
  std::ifstream is = open_in(path);
  read_header(is, kKindDataset, path);
  const auto count = read_pod<uint32_t>(is);
  const auto dim = read_pod<uint16_t>(is);
  if (dim != kFeatureDim) {
    throw std::runtime_error("io: " + path + " has feature dim " +
                             std::to_string(dim) + ", expected " +
                             std::to_string(kFeatureDim));
  }
  std::vector<SpectrumFrame> frames(count);
  for (uint32_t f = 0; f < count; ++f) {
    frames[f].features.resize(kFeatureDim);
    for (int i = 0; i < kFeatureDim; ++i) {
      frames[f].features[i] = read_pod<float>(is);
    }
    const auto label = read_pod<uint8_t>(is);
    if (label >= kNumSignalClasses) {
      throw std::runtime_error("io: " + path + " has invalid label " +
                               std::to_string(label));
    }
    frames[f].label = static_cast<SignalClass>(label);
    frames[f].snr_db = read_pod<float>(is);
  }
  return frames;
}

PolicyTable load_policy(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("io: cannot open " + path);
  PolicyTable policy;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (tag == "carrier") {
      CarrierPolicy c;
      int protected_flag = 0;
      if (!(ss >> c.carrier_index >> c.center_hz >> c.bandwidth_hz >>
            protected_flag >> c.max_power_dbm)) {
        throw std::runtime_error("policy: malformed carrier record at " + where);
      }
      if (c.bandwidth_hz <= 0.0) {
        throw std::runtime_error("policy: nonpositive bandwidth at " + where);
      }
      c.incumbent_protected = protected_flag != 0;
      policy.carriers.push_back(c);
    } else if (tag == "mcs") {
      McsThreshold t;
      if (!(ss >> t.mcs_index >> t.min_snr_db)) {
        throw std::runtime_error("policy: malformed mcs record at " + where);
      }
      if (t.mcs_index < 0 || t.mcs_index > 9) {
        throw std::runtime_error("policy: mcs index outside 0..9 at " + where);
      }
      policy.thresholds.push_back(t);
    } else {
      throw std::runtime_error("policy: unknown record '" + tag + "' at " + where);
    }
  }
  if (policy.carriers.empty()) {
    throw std::runtime_error("policy: " + path + " defines no carriers");
  }
  // Carriers must not overlap in frequency.
  std::vector<CarrierPolicy> sorted = policy.carriers;
  std::sort(sorted.begin(), sorted.end(),
            [](const CarrierPolicy& a, const CarrierPolicy& b) {
              return a.center_hz < b.center_hz;
            });
  for (size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double hi = sorted[i].center_hz + sorted[i].bandwidth_hz / 2.0;
    const double lo = sorted[i + 1].center_hz - sorted[i + 1].bandwidth_hz / 2.0;
    if (hi > lo) {
      throw std::runtime_error("policy: carriers " +
                               std::to_string(sorted[i].carrier_index) + " and " +
                               std::to_string(sorted[i + 1].carrier_index) +
                               " overlap");
    }
  }
  for (size_t i = 0; i + 1 < policy.thresholds.size(); ++i) {
    if (policy.thresholds[i + 1].mcs_index <= policy.thresholds[i].mcs_index ||
        policy.thresholds[i + 1].min_snr_db <= policy.thresholds[i].min_snr_db) {
      throw std::runtime_error(
          "policy: MCS thresholds must be strictly increasing");
    }
  }
  return policy;
}

std::string format_g9(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

}  // namespace airn
