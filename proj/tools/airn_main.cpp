// airn: experiment runner for the link-level precoding and spectrum-access
// toolkit. Subcommands: ee-sweep, dataset-gen, sas-train, sas-eval,
// sas-decide. Every command is deterministic under the configured
// master_seed.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "airn/dbn.hpp"
#include "airn/io.hpp"
#include "airn/precoder.hpp"
#include "airn/rng.hpp"
#include "airn/sas.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace airn;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed_override;
  std::optional<std::string> out_override;
};

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& context) {
  if (!j.is_object()) {
    throw std::runtime_error("config: " + context + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw std::runtime_error("config: unknown key '" + key + "' in " +
                               context);
    }
  }
}

json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  require_keys(j,
               {"master_seed", "output_dir", "ee_sweep", "dataset", "train",
                "eval", "decide"},
               "top level");
  return j;
}

uint64_t master_seed(const json& cfg, const CommonArgs& args) {
  if (args.seed_override) return *args.seed_override;
  return cfg.value("master_seed", uint64_t{1});
}

fs::path output_dir(const json& cfg, const CommonArgs& args) {
  const fs::path dir = args.out_override
                           ? fs::path(*args.out_override)
                           : fs::path(cfg.value("output_dir", std::string("out")));
  fs::create_directories(dir);
  return dir;
}

const json& require_block(const json& cfg, const std::string& name) {
  if (!cfg.contains(name)) {
    throw std::runtime_error("config: missing required block '" + name + "'");
  }
  return cfg.at(name);
}

// ---------------------------------------------------------------- ee-sweep

void write_ee_csv(const fs::path& path, const EeSweepResult& result) {
  std::ofstream os(path);
  os << "n_t,m_r,trials,ee_zf_mbit_per_j,ee_rnn_mbit_per_j,papr_zf_db,"
        "papr_rnn_db\n";
  for (const EeSweepRow& r : result.rows) {
    os << r.n_t << ',' << r.m_r << ',' << r.trials << ','
       << format_g9(r.ee_zf_mbit_per_j) << ',' << format_g9(r.ee_rnn_mbit_per_j)
       << ',' << format_g9(r.papr_zf_db) << ',' << format_g9(r.papr_rnn_db)
       << '\n';
  }
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

void write_ee_plot_script(const fs::path& path) {
  std::ofstream os(path);
  os << R"PY(#!/usr/bin/env python3
"""Plot energy efficiency vs antenna count per user count."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = sys.argv[1] if len(sys.argv) > 1 else "ee_sweep.csv"
rows = list(csv.DictReader(open(csv_path)))
by_users = defaultdict(list)
for r in rows:
    by_users[int(r["m_r"])].append(r)

fig, ax = plt.subplots(figsize=(7, 5))
for m_r, group in sorted(by_users.items()):
    group.sort(key=lambda r: int(r["n_t"]))
    n_t = [int(r["n_t"]) for r in group]
    ax.plot(n_t, [float(r["ee_zf_mbit_per_j"]) for r in group],
            "o--", label=f"ZF, M_r={m_r}")
    ax.plot(n_t, [float(r["ee_rnn_mbit_per_j"]) for r in group],
            "s-", label=f"RNN-aided, M_r={m_r}")
ax.set_xlabel("BS antennas N_t")
ax.set_ylabel("Energy efficiency (Mbit/Joule)")
ax.set_xscale("log", base=2)
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
out = csv_path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(f"wrote {out}")
)PY";
}

int cmd_ee_sweep(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  const json& block = require_block(cfg, "ee_sweep");
  require_keys(block,
               {"antennas", "users", "trials", "n_subcarriers", "fft_size",
                "cp_len", "sample_rate_hz", "ibo_db", "noise_snr_db", "pa",
                "rnn"},
               "ee_sweep");
  EeSweepParams params;
  const std::vector<int> antennas = block.at("antennas").get<std::vector<int>>();
  const std::vector<int> users = block.at("users").get<std::vector<int>>();
  const int trials = block.value("trials", 20);
  params.n_subcarriers = block.value("n_subcarriers", 128);
  params.fft_size = block.value("fft_size", 0);
  params.cp_len = block.value("cp_len", 0);
  params.sample_rate_hz = block.value("sample_rate_hz", 40e6);
  params.ibo_db = block.value("ibo_db", 3.0);
  params.noise_snr_db = block.value("noise_snr_db", 30.0);
  if (block.contains("pa")) {
    const json& pa = block.at("pa");
    require_keys(pa, {"gain", "smoothness", "static_power_w"}, "ee_sweep.pa");
    params.pa_gain = pa.value("gain", 1.0);
    params.pa_smoothness = pa.value("smoothness", 2.0);
    params.pa_static_w = pa.value("static_power_w", 0.0);
  }
  if (block.contains("rnn")) {
    const json& rnn = block.at("rnn");
    require_keys(rnn, {"step_size", "max_iters", "clip_threshold_ratio", "tol"},
                 "ee_sweep.rnn");
    params.rnn.step_size = rnn.value("step_size", params.rnn.step_size);
    params.rnn.max_iters = rnn.value("max_iters", params.rnn.max_iters);
    params.rnn.clip_threshold_ratio =
        rnn.value("clip_threshold_ratio", params.rnn.clip_threshold_ratio);
    params.rnn.tol = rnn.value("tol", params.rnn.tol);
  }

  const RngStream rng(master_seed(cfg, args));
  const EeSweepResult result = ee_sweep(antennas, users, params, trials, rng);
  for (const std::string& w : result.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  const fs::path dir = output_dir(cfg, args);
  write_ee_csv(dir / "ee_sweep.csv", result);
  write_ee_plot_script(dir / "plot_ee_sweep.py");
  std::cout << "wrote " << (dir / "ee_sweep.csv").string() << " ("
            << result.rows.size() << " rows)\n";
  return 0;
}

// ------------------------------------------------------------- dataset-gen

struct DatasetSpec {
  std::vector<double> snr_grid;
  int frames_per_cell = 200;
  int frame_samples = 5120;
  std::string prefix = "sas";
  int capture_files = 0;  // raw per-class captures for sas-decide demos
};

DatasetSpec parse_dataset_block(const json& block) {
  require_keys(block,
               {"snr_grid_db", "snr_min_db", "snr_max_db", "snr_step_db",
                "frames_per_cell", "frame_samples", "prefix", "capture_files"},
               "dataset");
  DatasetSpec spec;
  if (block.contains("snr_grid_db")) {
    spec.snr_grid = block.at("snr_grid_db").get<std::vector<double>>();
  } else {
    const double lo = block.value("snr_min_db", -20.0);
    const double hi = block.value("snr_max_db", 20.0);
    const double step = block.value("snr_step_db", 5.0);
    if (step <= 0.0) throw std::runtime_error("config: snr_step_db must be > 0");
    for (double snr = lo; snr <= hi + 1e-9; snr += step) {
      spec.snr_grid.push_back(snr);
    }
  }
  spec.frames_per_cell = block.value("frames_per_cell", 200);
  spec.frame_samples = block.value("frame_samples", 5120);
  spec.prefix = block.value("prefix", std::string("sas"));
  spec.capture_files = block.value("capture_files", 0);
  return spec;
}

void write_manifest(const fs::path& path, const Dataset& ds) {
  std::ofstream os(path);
  os << "class,snr_db,count,split\n";
  for (const DatasetManifestRow& row : ds.manifest) {
    os << to_string(row.signal_class) << ',' << format_g9(row.snr_db) << ','
       << row.count << ',' << row.split << '\n';
  }
}

Dataset generate_and_save_dataset(const DatasetSpec& spec, uint64_t seed,
                                  const fs::path& dir) {
  const RngStream rng(seed);
  Dataset ds = build_dataset(spec.snr_grid, spec.frames_per_cell,
                             rng.substream(1), spec.frame_samples);
  save_dataset((dir / (spec.prefix + "_train.airn")).string(), ds.train);
  save_dataset((dir / (spec.prefix + "_test.airn")).string(), ds.test);
  write_manifest(dir / (spec.prefix + "_manifest.csv"), ds);
  if (spec.capture_files > 0) {
    // standalone captures at the top of the SNR grid, one file per class
    const double snr = *std::max_element(spec.snr_grid.begin(),
                                         spec.snr_grid.end());
    for (int c = 0; c < kNumSignalClasses; ++c) {
      for (int i = 0; i < spec.capture_files; ++i) {
        RngStream cap_rng = rng.substream(2)
                                .substream(static_cast<uint64_t>(c))
                                .substream(static_cast<uint64_t>(i));
        const SampleBuffer buf =
            synth_capture(static_cast<SignalClass>(c), snr, spec.frame_samples,
                          cap_rng);
        const std::string name = spec.prefix + "_capture_" +
                                 to_string(static_cast<SignalClass>(c)) + "_" +
                                 std::to_string(i) + ".airn";
        save_sample_buffer((dir / name).string(), buf);
      }
    }
  }
  return ds;
}

int cmd_dataset_gen(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  const DatasetSpec spec = parse_dataset_block(require_block(cfg, "dataset"));
  const fs::path dir = output_dir(cfg, args);
  const Dataset ds = generate_and_save_dataset(spec, master_seed(cfg, args), dir);
  std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size()
            << " test frames under " << dir.string() << "/" << spec.prefix
            << "_*\n";
  return 0;
}

// --------------------------------------------------------------- sas-train

struct TrainSpec {
  std::vector<int> topology{256, 400, 400, 400, 400};
  TrainConfig pretrain_cfg;
  TrainConfig finetune_cfg;
  std::string dataset_prefix = "sas";
  std::string model_path = "sas_model.airn";
};

TrainConfig parse_train_config(const json& block, const std::string& context,
                               const TrainConfig& defaults) {
  require_keys(block,
               {"learning_rate", "momentum", "epochs", "batch_size",
                "mean_field"},
               context);
  TrainConfig cfg = defaults;
  cfg.learning_rate = block.value("learning_rate", defaults.learning_rate);
  cfg.momentum = block.value("momentum", defaults.momentum);
  cfg.epochs = block.value("epochs", defaults.epochs);
  cfg.batch_size = block.value("batch_size", defaults.batch_size);
  cfg.mean_field = block.value("mean_field", defaults.mean_field);
  return cfg;
}

TrainSpec parse_train_block(const json& block) {
  require_keys(block,
               {"topology", "pretrain", "finetune", "dataset_prefix",
                "model_path"},
               "train");
  TrainSpec spec;
  if (block.contains("topology")) {
    spec.topology = block.at("topology").get<std::vector<int>>();
  }
  // The supervised phase needs heavier momentum and more epochs than the
  // CD-1 defaults to carve the near-collinear classes apart.
  spec.pretrain_cfg.epochs = 30;
  spec.finetune_cfg.epochs = 150;
  spec.finetune_cfg.momentum = 0.9;
  if (block.contains("pretrain")) {
    spec.pretrain_cfg =
        parse_train_config(block.at("pretrain"), "train.pretrain",
                           spec.pretrain_cfg);
  }
  if (block.contains("finetune")) {
    spec.finetune_cfg =
        parse_train_config(block.at("finetune"), "train.finetune",
                           spec.finetune_cfg);
  }
  spec.dataset_prefix = block.value("dataset_prefix", spec.dataset_prefix);
  spec.model_path = block.value("model_path", spec.model_path);
  return spec;
}

Dataset load_or_generate_dataset(const json& cfg, const std::string& prefix,
                                 uint64_t seed, const fs::path& dir) {
  const fs::path train_path = dir / (prefix + "_train.airn");
  const fs::path test_path = dir / (prefix + "_test.airn");
  if (fs::exists(train_path) && fs::exists(test_path)) {
    Dataset ds;
    ds.train = load_dataset(train_path.string());
    ds.test = load_dataset(test_path.string());
    return ds;
  }
  if (!cfg.contains("dataset")) {
    throw std::runtime_error("no dataset found at " + train_path.string() +
                             " and the config has no 'dataset' block to "
                             "generate one");
  }
  DatasetSpec spec = parse_dataset_block(cfg.at("dataset"));
  spec.prefix = prefix;
  return generate_and_save_dataset(spec, seed, dir);
}

int cmd_sas_train(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  const TrainSpec spec = parse_train_block(require_block(cfg, "train"));
  if (spec.topology.size() < 2 || spec.topology.front() != kFeatureDim) {
    throw std::runtime_error("config: topology must start at " +
                             std::to_string(kFeatureDim) +
                             " and name at least one hidden layer");
  }
  const uint64_t seed = master_seed(cfg, args);
  const fs::path dir = output_dir(cfg, args);
  const Dataset ds =
      load_or_generate_dataset(cfg, spec.dataset_prefix, seed, dir);
  const auto [data, labels] = to_matrix(ds.train);

  const RngStream rng(seed);
  RngStream pre_rng = rng.substream(2);
  std::vector<std::vector<double>> recon_log;
  std::vector<Rbm> stack =
      pretrain(spec.topology, data, spec.pretrain_cfg, pre_rng, &recon_log);
  DbnClassifier model = make_classifier(std::move(stack), kNumSignalClasses);

  RngStream ft_rng = rng.substream(3);
  std::vector<double> loss_log;
  const double final_loss =
      fine_tune(model, data, labels, spec.finetune_cfg, ft_rng, &loss_log);

  save_model((dir / spec.model_path).string(), model);
  std::ofstream log(dir / "training_log.csv");
  log << "phase,layer,epoch,value\n";
  for (size_t layer = 0; layer < recon_log.size(); ++layer) {
    for (size_t epoch = 0; epoch < recon_log[layer].size(); ++epoch) {
      log << "pretrain," << layer << ',' << epoch << ','
          << format_g9(recon_log[layer][epoch]) << '\n';
    }
  }
  for (size_t epoch = 0; epoch < loss_log.size(); ++epoch) {
    log << "finetune,-1," << epoch << ',' << format_g9(loss_log[epoch]) << '\n';
  }
  std::cout << "trained on " << ds.train.size() << " frames; final loss "
            << format_g9(final_loss) << "; model at "
            << (dir / spec.model_path).string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- sas-eval

int count_manifest_test_frames(const fs::path& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) return -1;
  std::string line;
  std::getline(is, line);  // header
  int total = 0;
  while (std::getline(is, line)) {
    const auto last_comma = line.rfind(',');
    if (last_comma == std::string::npos) continue;
    if (line.substr(last_comma + 1) != "test") continue;
    const auto prev_comma = line.rfind(',', last_comma - 1);
    total += std::stoi(line.substr(prev_comma + 1, last_comma - prev_comma - 1));
  }
  return total;
}

void write_accuracy_plot_script(const fs::path& path) {
  std::ofstream os(path);
  os << R"PY(#!/usr/bin/env python3
"""Plot detection accuracy vs SNR per class."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = sys.argv[1] if len(sys.argv) > 1 else "accuracy.csv"
rows = list(csv.DictReader(open(csv_path)))
per_class = defaultdict(list)
overall = {}
for r in rows:
    snr = float(r["snr_db"])
    per_class[r["class"]].append((snr, float(r["recall"])))
    overall[snr] = float(r["overall_accuracy"])

fig, ax = plt.subplots(figsize=(7, 5))
for cls, points in sorted(per_class.items()):
    points.sort()
    ax.plot([p[0] for p in points], [p[1] for p in points], "o-", label=cls)
snrs = sorted(overall)
ax.plot(snrs, [overall[s] for s in snrs], "k--", label="overall")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("Detection accuracy")
ax.set_ylim(-0.02, 1.02)
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out = csv_path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(f"wrote {out}")
)PY";
}

int cmd_sas_eval(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  const json& block = require_block(cfg, "eval");
  require_keys(block, {"model_path", "dataset_prefix"}, "eval");
  const std::string prefix = block.value("dataset_prefix", std::string("sas"));
  const fs::path dir = output_dir(cfg, args);
  const fs::path model_path =
      dir / block.value("model_path", std::string("sas_model.airn"));
  const DbnClassifier model = load_model(model_path.string());

  const fs::path test_path = dir / (prefix + "_test.airn");
  const std::vector<SpectrumFrame> test = load_dataset(test_path.string());
  if (test.empty()) throw std::runtime_error("empty test set " + test_path.string());
  const int manifest_count =
      count_manifest_test_frames(dir / (prefix + "_manifest.csv"));
  if (manifest_count >= 0 &&
      manifest_count != static_cast<int>(test.size())) {
    throw std::runtime_error("test set does not match the manifest split");
  }

  std::set<float> snrs;
  for (const auto& frame : test) snrs.insert(frame.snr_db);
  std::ofstream os(dir / "accuracy.csv");
  os << "snr_db,class,recall,overall_accuracy\n";
  for (float snr : snrs) {
    std::vector<SpectrumFrame> subset;
    for (const auto& frame : test) {
      if (frame.snr_db == snr) subset.push_back(frame);
    }
    const auto [data, labels] = to_matrix(subset);
    const AccuracyReport report = evaluate_accuracy(model, data, labels);
    for (int c = 0; c < kNumSignalClasses; ++c) {
      os << format_g9(snr) << ',' << to_string(static_cast<SignalClass>(c))
         << ',' << format_g9(report.per_class_recall[c]) << ','
         << format_g9(report.overall) << '\n';
    }
  }
  write_accuracy_plot_script(dir / "plot_accuracy.py");
  std::cout << "wrote " << (dir / "accuracy.csv").string() << "\n";
  return 0;
}

// -------------------------------------------------------------- sas-decide

int cmd_sas_decide(const CommonArgs& args,
                   const std::vector<std::string>& capture_paths) {
  const json cfg = load_config(args.config_path);
  const json& block = require_block(cfg, "decide");
  require_keys(block,
               {"model_path", "policy_path", "link_snr_db", "sample_rate_hz"},
               "decide");
  const fs::path dir = output_dir(cfg, args);
  const fs::path model_path =
      dir / block.value("model_path", std::string("sas_model.airn"));
  const std::string policy_path = block.at("policy_path").get<std::string>();
  const double link_snr_db = block.value("link_snr_db", 10.0);
  const double sample_rate = block.value("sample_rate_hz", kSasSampleRateHz);

  const DbnClassifier model = load_model(model_path.string());
  const PolicyTable policy = load_policy(policy_path);
  if (capture_paths.size() != policy.carriers.size()) {
    throw std::runtime_error(
        "need one capture per policy carrier: got " +
        std::to_string(capture_paths.size()) + " captures for " +
        std::to_string(policy.carriers.size()) + " carriers");
  }

  std::vector<SignalClass> occupancy;
  for (const std::string& path : capture_paths) {
    const SampleBuffer buf = load_sample_buffer(path, sample_rate);
    occupancy.push_back(detect(model, buf).first);
  }
  const SpectrumDecision decision =
      decide_spectrum(occupancy, policy, link_snr_db);

  json record;
  record["access_granted"] = decision.access_granted;
  record["carrier_index"] = decision.carrier_index;
  record["bandwidth_hz"] = decision.bandwidth_hz;
  record["mcs_index"] = decision.mcs_index;
  record["tx_power_dbm"] = decision.tx_power_dbm;
  json occ = json::array();
  for (SignalClass c : occupancy) occ.push_back(to_string(c));
  record["occupancy"] = occ;
  std::cout << record.dump() << "\n";

  if (decision.access_granted) {
    std::cout << "access granted on carrier " << decision.carrier_index
              << " (" << decision.bandwidth_hz / 1e6 << " MHz), MCS "
              << decision.mcs_index << ", max " << decision.tx_power_dbm
              << " dBm\n";
  } else {
    std::cout << "access denied: no free unprotected carrier supports the "
                 "link\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"link-level MIMO precoding and spectrum-access experiments"};
  app.require_subcommand(1);

  CommonArgs args;
  std::vector<std::string> captures;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--seed", args.seed_override, "override master_seed");
    cmd->add_option("--out", args.out_override, "override output directory");
  };

  CLI::App* ee = app.add_subcommand("ee-sweep",
                                    "energy-efficiency sweep over antenna/user "
                                    "configurations");
  add_common(ee);
  CLI::App* gen = app.add_subcommand("dataset-gen",
                                     "synthesize a labeled spectrum dataset");
  add_common(gen);
  CLI::App* train = app.add_subcommand("sas-train",
                                       "pretrain and fine-tune the spectrum "
                                       "classifier");
  add_common(train);
  CLI::App* eval = app.add_subcommand("sas-eval",
                                      "evaluate the classifier on the held-out "
                                      "split");
  add_common(eval);
  CLI::App* decide = app.add_subcommand("sas-decide",
                                        "classify captures and emit a spectrum "
                                        "decision");
  add_common(decide);
  decide->add_option("captures", captures, "capture files, one per carrier")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ee->parsed()) return cmd_ee_sweep(args);
    if (gen->parsed()) return cmd_dataset_gen(args);
    if (train->parsed()) return cmd_sas_train(args);
    if (eval->parsed()) return cmd_sas_eval(args);
    if (decide->parsed()) return cmd_sas_decide(args, captures);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
