#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "airn/io.hpp"
#include "airn/rng.hpp"
#include "airn/sas.hpp"

namespace fs = std::filesystem;
using namespace airn;

namespace {

struct RunResult {
  int exit_code;
  std::string stdout_text;
  std::string stderr_text;
};

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "airn_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(AIRN_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.stdout_text = slurp(out);
  result.stderr_text = slurp(err);
  return result;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

// A hand-built model whose head always votes for one class, regardless of
// the input spectrum. Lets the decide command be tested without training.
void write_constant_model(const fs::path& path, int winning_class) {
  RngStream rng(1);
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(kFeatureDim, 4, rng));
  DbnClassifier model = make_classifier(std::move(stack), kNumSignalClasses);
  model.head_b[winning_class] = 50.0;
  save_model(path.string(), model);
}

}  // namespace

TEST_CASE("unknown config keys are fatal and named") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "bad.json";
  write_file(cfg, R"({"master_seed": 1, "ee_sweep": {"antennas": [8],
    "users": [2], "trials": 1, "typo_key": 5}})");
  const RunResult r =
      run_cli("ee-sweep --config " + cfg.string() + " --out " +
              (dir / "bad_out").string());
  CHECK(r.exit_code != 0);
  CHECK(r.stderr_text.find("error:") != std::string::npos);
  CHECK(r.stderr_text.find("typo_key") != std::string::npos);
}

TEST_CASE("missing config file is a clean error") {
  const RunResult r = run_cli("ee-sweep --config /nonexistent/cfg.json");
  CHECK(r.exit_code != 0);
  CHECK(r.stderr_text.find("error:") != std::string::npos);
}

TEST_CASE("ee-sweep writes a deterministic CSV and skips infeasible pairs") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "ee.json";
  write_file(cfg, R"({
    "master_seed": 7,
    "ee_sweep": {
      "antennas": [2, 8], "users": [2], "trials": 2,
      "n_subcarriers": 16,
      "rnn": {"max_iters": 60}
    }
  })");
  const fs::path out1 = dir / "ee_out1";
  const fs::path out2 = dir / "ee_out2";
  const RunResult r1 =
      run_cli("ee-sweep --config " + cfg.string() + " --out " + out1.string());
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.stderr_text.find("warning:") != std::string::npos);
  CHECK(r1.stderr_text.find("n_t=2") != std::string::npos);

  const RunResult r2 =
      run_cli("ee-sweep --config " + cfg.string() + " --out " + out2.string());
  REQUIRE(r2.exit_code == 0);
  const std::string csv1 = slurp(out1 / "ee_sweep.csv");
  const std::string csv2 = slurp(out2 / "ee_sweep.csv");
  CHECK(csv1 == csv2);
  CHECK(csv1.find("n_t,m_r,trials,ee_zf_mbit_per_j,ee_rnn_mbit_per_j,"
                  "papr_zf_db,papr_rnn_db") == 0);
  // one data row for the feasible pair
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 2);
  CHECK(fs::exists(out1 / "plot_ee_sweep.py"));

  // a different seed changes the numbers
  const fs::path out3 = dir / "ee_out3";
  const RunResult r3 = run_cli("ee-sweep --config " + cfg.string() +
                               " --seed 8 --out " + out3.string());
  REQUIRE(r3.exit_code == 0);
  CHECK(slurp(out3 / "ee_sweep.csv") != csv1);
}

TEST_CASE("dataset-gen is deterministic and writes the manifest") {
  const fs::path dir = work_dir();
  const fs::path cfg = dir / "ds.json";
  write_file(cfg, R"({
    "master_seed": 3,
    "dataset": {"snr_grid_db": [0, 10], "frames_per_cell": 10,
                "frame_samples": 2560, "prefix": "mini", "capture_files": 1}
  })");
  const fs::path out1 = dir / "ds_out1";
  const fs::path out2 = dir / "ds_out2";
  REQUIRE(run_cli("dataset-gen --config " + cfg.string() + " --out " +
                  out1.string()).exit_code == 0);
  REQUIRE(run_cli("dataset-gen --config " + cfg.string() + " --out " +
                  out2.string()).exit_code == 0);
  CHECK(slurp(out1 / "mini_train.airn") == slurp(out2 / "mini_train.airn"));
  CHECK(slurp(out1 / "mini_test.airn") == slurp(out2 / "mini_test.airn"));
  CHECK(slurp(out1 / "mini_manifest.csv") == slurp(out2 / "mini_manifest.csv"));

  const auto train = load_dataset((out1 / "mini_train.airn").string());
  const auto test = load_dataset((out1 / "mini_test.airn").string());
  CHECK(train.size() == 64);  // 8 per cell, 2 snrs, 4 classes
  CHECK(test.size() == 16);
  const std::string manifest = slurp(out1 / "mini_manifest.csv");
  CHECK(manifest.find("class,snr_db,count,split") == 0);
  CHECK(manifest.find("WIFI") != std::string::npos);

  // per-class raw captures for the decide demo
  for (const char* cls : {"NOISE", "WIFI", "LTE", "BOTH"}) {
    const fs::path cap = out1 / ("mini_capture_" + std::string(cls) + "_0.airn");
    REQUIRE(fs::exists(cap));
    CHECK(load_sample_buffer(cap.string(), 40e6).samples.size() == 2560);
  }
}

TEST_CASE("sas-train fits a small model and logs decreasing loss") {
  const fs::path dir = work_dir() / "train_run";
  fs::create_directories(dir);
  const fs::path cfg = dir / "train.json";
  write_file(cfg, R"({
    "master_seed": 5,
    "dataset": {"snr_grid_db": [5, 15], "frames_per_cell": 15,
                "frame_samples": 2560, "prefix": "sas"},
    "train": {
      "topology": [256, 24],
      "pretrain": {"epochs": 3},
      "finetune": {"epochs": 40, "learning_rate": 0.05, "momentum": 0.9}
    }
  })");
  const RunResult r =
      run_cli("sas-train --config " + cfg.string() + " --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "sas_model.airn"));

  // the model file round-trips and the training log shows progress
  const DbnClassifier model = load_model((dir / "sas_model.airn").string());
  CHECK(model.layer_sizes == std::vector<int>{256, 24});
  const std::string log = slurp(dir / "training_log.csv");
  REQUIRE(log.find("phase,layer,epoch,value") == 0);
  double first_loss = -1.0, last_loss = -1.0;
  std::istringstream ss(log);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("finetune,", 0) != 0) continue;
    const double value = std::stod(line.substr(line.rfind(',') + 1));
    if (first_loss < 0.0) first_loss = value;
    last_loss = value;
  }
  REQUIRE(first_loss > 0.0);
  CHECK(last_loss <= first_loss * 1.05);

  SUBCASE("sas-eval scores the held-out split only") {
    const fs::path eval_cfg = dir / "eval.json";
    write_file(eval_cfg, R"({
      "master_seed": 5,
      "eval": {"model_path": "sas_model.airn", "dataset_prefix": "sas"}
    })");
    const RunResult er = run_cli("sas-eval --config " + eval_cfg.string() +
                                 " --out " + dir.string());
    REQUIRE(er.exit_code == 0);
    const std::string csv = slurp(dir / "accuracy.csv");
    REQUIRE(csv.find("snr_db,class,recall,overall_accuracy") == 0);
    // 2 SNR points x 4 classes
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    std::istringstream cs(csv);
    std::string row;
    std::getline(cs, row);
    while (std::getline(cs, row)) {
      const auto c1 = row.find(',');
      const auto c2 = row.find(',', c1 + 1);
      const auto c3 = row.find(',', c2 + 1);
      const std::string recall = row.substr(c2 + 1, c3 - c2 - 1);
      const double overall = std::stod(row.substr(c3 + 1));
      CHECK(overall >= 0.0);
      CHECK(overall <= 1.0);
      if (recall != "nan" && recall != "-nan") {
        const double rec = std::stod(recall);
        CHECK(rec >= 0.0);
        CHECK(rec <= 1.0);
      }
    }
    CHECK(fs::exists(dir / "plot_accuracy.py"));
  }
}

TEST_CASE("sas-train without data or a dataset block fails cleanly") {
  const fs::path dir = work_dir() / "train_empty";
  fs::create_directories(dir);
  const fs::path cfg = dir / "train.json";
  write_file(cfg, R"({"master_seed": 5, "train": {"topology": [256, 8]}})");
  const RunResult r =
      run_cli("sas-train --config " + cfg.string() + " --out " + dir.string());
  CHECK(r.exit_code != 0);
  CHECK(r.stderr_text.find("error:") != std::string::npos);
  CHECK(r.stderr_text.find("dataset") != std::string::npos);
}

TEST_CASE("sas-decide grants on all-noise captures and denies when occupied") {
  const fs::path dir = work_dir() / "decide_run";
  fs::create_directories(dir);
  write_file(dir / "policy.txt",
             "carrier 0 3.55e9 10e6 0 30\n"
             "carrier 1 3.56e9 10e6 0 23\n"
             "mcs 0 -5\nmcs 4 10\nmcs 9 25\n");

  RngStream rng(11);
  for (int i = 0; i < 2; ++i) {
    RngStream sub = rng.substream(static_cast<uint64_t>(i));
    save_sample_buffer(
        (dir / ("cap" + std::to_string(i) + ".airn")).string(),
        synth_capture(SignalClass::kNoise, 0.0, 4096, sub));
  }

  const fs::path cfg = dir / "decide.json";
  write_file(cfg, R"({
    "master_seed": 5,
    "decide": {"model_path": "noise_model.airn", "policy_path": ")" +
                       (dir / "policy.txt").string() + R"(",
               "link_snr_db": 12.0}
  })");

  write_constant_model(dir / "noise_model.airn",
                       static_cast<int>(SignalClass::kNoise));
  const std::string captures = (dir / "cap0.airn").string() + " " +
                               (dir / "cap1.airn").string();
  const RunResult granted = run_cli("sas-decide --config " + cfg.string() +
                                    " --out " + dir.string() + " " + captures);
  REQUIRE(granted.exit_code == 0);
  CHECK(granted.stdout_text.find("\"access_granted\":true") != std::string::npos);
  CHECK(granted.stdout_text.find("\"carrier_index\":0") != std::string::npos);
  CHECK(granted.stdout_text.find("\"mcs_index\":4") != std::string::npos);

  // identical inputs give the identical decision line
  const RunResult again = run_cli("sas-decide --config " + cfg.string() +
                                  " --out " + dir.string() + " " + captures);
  CHECK(again.stdout_text == granted.stdout_text);

  // a model that sees LTE everywhere must deny
  write_constant_model(dir / "noise_model.airn",
                       static_cast<int>(SignalClass::kLte));
  const RunResult denied = run_cli("sas-decide --config " + cfg.string() +
                                   " --out " + dir.string() + " " + captures);
  REQUIRE(denied.exit_code == 0);
  CHECK(denied.stdout_text.find("\"access_granted\":false") != std::string::npos);
  CHECK(denied.stdout_text.find("\"carrier_index\":-1") != std::string::npos);

  // missing model file is a clean error
  fs::remove(dir / "noise_model.airn");
  const RunResult missing = run_cli("sas-decide --config " + cfg.string() +
                                    " --out " + dir.string() + " " + captures);
  CHECK(missing.exit_code != 0);
  CHECK(missing.stderr_text.find("error:") != std::string::npos);
}
