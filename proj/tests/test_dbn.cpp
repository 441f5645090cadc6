#include <doctest.h>

#include <cmath>

#include "airn/dbn.hpp"
#include "oracles/cd1_oracle.hpp"

using namespace airn;

namespace {

Rbm fixture_rbm() {
  const oracle::Cd1Fixture f = oracle::reference_fixture();
  Rbm rbm;
  rbm.w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>(
      f.w.data(), f.n_visible, f.n_hidden);
  rbm.b_visible = Eigen::Map<const Eigen::VectorXd>(f.b_visible.data(), f.n_visible);
  rbm.b_hidden = Eigen::Map<const Eigen::VectorXd>(f.b_hidden.data(), f.n_hidden);
  return rbm;
}

Eigen::MatrixXd random_unit_batch(int rows, int cols, RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.next_uniform();
  }
  return m;
}

}  // namespace

TEST_CASE("propagation through zero weights gives 0.5 everywhere") {
  Rbm rbm;
  rbm.w = Eigen::MatrixXd::Zero(4, 3);
  rbm.b_visible = Eigen::VectorXd::Zero(4);
  rbm.b_hidden = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd v(4);
  v << 0.2, 0.9, 0.4, 0.0;
  const Eigen::VectorXd up = rbm_propagate(rbm, v, Direction::Up);
  for (int j = 0; j < 3; ++j) CHECK(up[j] == 0.5);
}

TEST_CASE("single-weight propagation evaluates the sigmoid directly") {
  Rbm rbm;
  rbm.w = Eigen::MatrixXd::Constant(1, 1, 1.0);
  rbm.b_visible = Eigen::VectorXd::Zero(1);
  rbm.b_hidden = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(1);
  CHECK(rbm_propagate(rbm, v, Direction::Up)[0] ==
        doctest::Approx(0.7310586).epsilon(1e-6));
}

TEST_CASE("propagation matches a hand matrix multiply on a 5x3 RBM") {
  RngStream rng(2);
  Rbm rbm = init_rbm(5, 3, rng);
  rbm.w *= 100.0;  // spread away from zero
  for (int i = 0; i < 5; ++i) rbm.b_visible[i] = rng.next_gaussian();
  for (int j = 0; j < 3; ++j) rbm.b_hidden[j] = rng.next_gaussian();
  Eigen::VectorXd v(5);
  for (int i = 0; i < 5; ++i) v[i] = rng.next_uniform();

  const Eigen::VectorXd up = rbm_propagate(rbm, v, Direction::Up);
  for (int j = 0; j < 3; ++j) {
    double z = rbm.b_hidden[j];
    for (int i = 0; i < 5; ++i) z += rbm.w(i, j) * v[i];
    CHECK(up[j] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
    CHECK(up[j] > 0.0);
    CHECK(up[j] < 1.0);
  }
  Eigen::VectorXd h(3);
  for (int j = 0; j < 3; ++j) h[j] = rng.next_uniform();
  const Eigen::VectorXd down = rbm_propagate(rbm, h, Direction::Down);
  for (int i = 0; i < 5; ++i) {
    double z = rbm.b_visible[i];
    for (int j = 0; j < 3; ++j) z += rbm.w(i, j) * h[j];
    CHECK(down[i] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
  }
}

TEST_CASE("propagation rejects mismatched vector lengths") {
  RngStream rng(3);
  const Rbm rbm = init_rbm(5, 3, rng);
  CHECK_THROWS_AS(rbm_propagate(rbm, Eigen::VectorXd::Zero(3), Direction::Up),
                  std::invalid_argument);
  CHECK_THROWS_AS(rbm_propagate(rbm, Eigen::VectorXd::Zero(5), Direction::Down),
                  std::invalid_argument);
}

TEST_CASE("cd1 on a zero model and zero batch hits the symmetric fixed point") {
  // With W = 0 every probability is 0.5, so the reconstruction v' = 0.5 pulls
  // the weights by -lr/4 and the visible bias by -lr/2 while the hidden bias
  // stays put.
  Rbm rbm;
  rbm.w = Eigen::MatrixXd::Zero(3, 2);
  rbm.b_visible = Eigen::VectorXd::Zero(3);
  rbm.b_hidden = Eigen::VectorXd::Zero(2);
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.mean_field = true;
  RngStream rng(4);
  const double err = cd1_update(rbm, Eigen::MatrixXd::Zero(2, 3), cfg, rng);
  CHECK(err == doctest::Approx(3 * 0.25).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(rbm.w(i, j) == doctest::Approx(-0.2 * 0.25).epsilon(1e-12));
    }
    CHECK(rbm.b_visible[i] == doctest::Approx(-0.2 * 0.5).epsilon(1e-12));
  }
  CHECK(rbm.b_hidden.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cd1 mean-field update equals the hand-rolled oracle bitwise") {
  const oracle::Cd1Fixture f = oracle::reference_fixture();
  const oracle::Cd1Result expected = oracle::cd1_single_step(f);

  Rbm rbm = fixture_rbm();
  TrainConfig cfg;
  cfg.learning_rate = f.learning_rate;
  cfg.mean_field = true;
  RngStream rng(0);
  const Eigen::MatrixXd batch =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(f.v.data(), f.batch,
                                                       f.n_visible);
  const double err = cd1_update(rbm, batch, cfg, rng);

  for (int i = 0; i < f.n_visible; ++i) {
    for (int j = 0; j < f.n_hidden; ++j) {
      CHECK(rbm.w(i, j) == expected.w[size_t(i * f.n_hidden + j)]);
    }
    CHECK(rbm.b_visible[i] == expected.b_visible[size_t(i)]);
  }
  for (int j = 0; j < f.n_hidden; ++j) {
    CHECK(rbm.b_hidden[j] == expected.b_hidden[size_t(j)]);
  }
  CHECK(err == expected.recon_error);
}

TEST_CASE("sampled cd1 is deterministic per stream") {
  RngStream init(5);
  Rbm r1 = init_rbm(6, 4, init);
  Rbm r2 = r1;
  RngStream data_rng(6);
  const Eigen::MatrixXd batch = random_unit_batch(8, 6, data_rng);
  TrainConfig cfg;
  RngStream a(7), b(7);
  cd1_update(r1, batch, cfg, a);
  cd1_update(r2, batch, cfg, b);
  CHECK(r1.w == r2.w);
  CHECK(r1.b_visible == r2.b_visible);
  CHECK(r1.b_hidden == r2.b_hidden);
}

TEST_CASE("cd1 rejects values outside [0,1]") {
  RngStream rng(8);
  Rbm rbm = init_rbm(3, 2, rng);
  Eigen::MatrixXd bad(1, 3);
  bad << 0.5, 1.2, 0.0;
  TrainConfig cfg;
  CHECK_THROWS_AS(cd1_update(rbm, bad, cfg, rng), std::invalid_argument);
}

TEST_CASE("pretraining reduces reconstruction error on the toy patterns") {
  Eigen::MatrixXd data(4, 4);
  data << 0, 0, 1, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0;
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 4;
  cfg.mean_field = true;
  RngStream rng(9);
  std::vector<std::vector<double>> log;
  const std::vector<Rbm> stack = pretrain({4, 3}, data, cfg, rng, &log);
  REQUIRE(stack.size() == 1);
  REQUIRE(log.size() == 1);
  CHECK(log[0].back() <= log[0].front() * 1.05);
}

TEST_CASE("the published four-layer topology is accepted") {
  RngStream data_rng(10);
  const Eigen::MatrixXd data = random_unit_batch(8, 256, data_rng);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  RngStream rng(11);
  const std::vector<Rbm> stack = pretrain({256, 400, 400, 400, 400}, data, cfg, rng);
  REQUIRE(stack.size() == 4);
  CHECK(stack[0].n_visible() == 256);
  for (const Rbm& rbm : stack) CHECK(rbm.n_hidden() == 400);
}

TEST_CASE("a single-layer stack equals direct cd1 training bitwise") {
  RngStream data_rng(12);
  const Eigen::MatrixXd data = random_unit_batch(10, 6, data_rng);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  RngStream rng(13);
  const std::vector<Rbm> stack = pretrain({6, 4}, data, cfg, rng);

  // Mirror pretrain's stream usage for the degenerate one-layer case.
  RngStream mirror(13);
  RngStream layer_rng = mirror.substream(0);
  Rbm direct = init_rbm(6, 4, layer_rng);
  Cd1Velocity vel;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index start = 0; start < data.rows(); start += cfg.batch_size) {
      const Eigen::Index rows =
          std::min<Eigen::Index>(cfg.batch_size, data.rows() - start);
      cd1_update(direct, data.middleRows(start, rows), cfg, layer_rng, &vel);
    }
  }
  CHECK(stack[0].w == direct.w);
  CHECK(stack[0].b_visible == direct.b_visible);
  CHECK(stack[0].b_hidden == direct.b_hidden);
}

TEST_CASE("pretrain rejects mismatched data dimension") {
  RngStream rng(14);
  const Eigen::MatrixXd data = random_unit_batch(4, 5, rng);
  TrainConfig cfg;
  CHECK_THROWS_AS(pretrain({4, 3}, data, cfg, rng), std::invalid_argument);
}

TEST_CASE("zero head predicts uniform class probabilities") {
  RngStream rng(15);
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(6, 4, rng));
  const DbnClassifier model = make_classifier(std::move(stack), 4);
  Eigen::VectorXd x(6);
  for (int i = 0; i < 6; ++i) x[i] = rng.next_uniform();
  const Eigen::VectorXd p = predict(model, x);
  for (int c = 0; c < 4; ++c) CHECK(p[c] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("fine-tuning solves a linearly separable toy set") {
  // 8 points in 2-D lifted to a 6-dim visible layer.
  Eigen::MatrixXd points(8, 2);
  points << 0.1, 0.2, 0.3, 0.1, 0.2, 0.4, 0.1, 0.4,
            0.9, 0.8, 0.7, 0.9, 0.8, 0.6, 0.9, 0.7;
  std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1};
  Eigen::MatrixXd data(8, 6);
  data << points, points, points;

  TrainConfig pre_cfg;
  pre_cfg.epochs = 5;
  pre_cfg.batch_size = 8;
  RngStream rng(16);
  DbnClassifier model = make_classifier(pretrain({6, 5}, data, pre_cfg, rng), 2);

  TrainConfig ft_cfg;
  ft_cfg.epochs = 200;
  ft_cfg.learning_rate = 0.5;
  ft_cfg.momentum = 0.9;
  ft_cfg.batch_size = 8;
  RngStream ft_rng(17);
  std::vector<double> losses;
  const double final_loss = fine_tune(model, data, labels, ft_cfg, ft_rng, &losses);
  CHECK(final_loss <= losses.front() * 1.05);
  const AccuracyReport report = evaluate_accuracy(model, data, labels);
  CHECK(report.overall == 1.0);
}

TEST_CASE("backprop gradients match finite differences") {
  RngStream rng(18);
  const Eigen::MatrixXd data = random_unit_batch(6, 5, rng);
  std::vector<int> labels = {0, 2, 1, 0, 2, 1};
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(5, 4, rng));
  DbnClassifier model = make_classifier(std::move(stack), 3);
  // move the head off zero so its gradient is generic
  for (Eigen::Index i = 0; i < model.head_w.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.head_w.cols(); ++j) {
      model.head_w(i, j) = 0.3 * rng.next_gaussian();
    }
  }
  const DbnGradients g = dbn_loss_gradients(model, data, labels);
  const double h = 1e-5;

  const auto loss_at = [&](const DbnClassifier& m) {
    return dbn_loss_gradients(m, data, labels).loss;
  };
  for (int trial = 0; trial < 10; ++trial) {
    DbnClassifier up = model, down = model;
    const Eigen::Index i =
        static_cast<Eigen::Index>(rng.next_u64() % model.head_w.rows());
    const Eigen::Index j =
        static_cast<Eigen::Index>(rng.next_u64() % model.head_w.cols());
    up.head_w(i, j) += h;
    down.head_w(i, j) -= h;
    const double fd = (loss_at(up) - loss_at(down)) / (2.0 * h);
    CHECK(std::abs(fd - g.head_w(i, j)) <=
          1e-4 * std::max({std::abs(fd), std::abs(g.head_w(i, j)), 1e-8}));
  }
  for (int trial = 0; trial < 10; ++trial) {
    DbnClassifier up = model, down = model;
    const Eigen::Index i =
        static_cast<Eigen::Index>(rng.next_u64() % model.layers[0].w.rows());
    const Eigen::Index j =
        static_cast<Eigen::Index>(rng.next_u64() % model.layers[0].w.cols());
    up.layers[0].w(i, j) += h;
    down.layers[0].w(i, j) -= h;
    const double fd = (loss_at(up) - loss_at(down)) / (2.0 * h);
    CHECK(std::abs(fd - g.layer_w[0](i, j)) <=
          1e-4 * std::max({std::abs(fd), std::abs(g.layer_w[0](i, j)), 1e-8}));
  }
}

TEST_CASE("fine_tune rejects out-of-range labels") {
  RngStream rng(19);
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(4, 3, rng));
  DbnClassifier model = make_classifier(std::move(stack), 2);
  const Eigen::MatrixXd data = random_unit_batch(2, 4, rng);
  TrainConfig cfg;
  CHECK_THROWS_AS(fine_tune(model, data, {0, 2}, cfg, rng), std::invalid_argument);
}

TEST_CASE("predict outputs a probability vector") {
  RngStream rng(20);
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(7, 5, rng));
  DbnClassifier model = make_classifier(std::move(stack), 4);
  for (Eigen::Index i = 0; i < model.head_w.size(); ++i) {
    model.head_w(i / 4, i % 4) = rng.next_gaussian();
  }
  Eigen::VectorXd x(7);
  for (int i = 0; i < 7; ++i) x[i] = rng.next_uniform();
  const Eigen::VectorXd p = predict(model, x);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(predict(model, Eigen::VectorXd::Zero(6)), std::invalid_argument);
}

TEST_CASE("a constant classifier scores 0.25 on a balanced 4-class set") {
  RngStream rng(21);
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(4, 3, rng));
  DbnClassifier model = make_classifier(std::move(stack), 4);
  model.head_b << 10.0, 0.0, 0.0, 0.0;  // always class 0
  const Eigen::MatrixXd data = random_unit_batch(40, 4, rng);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[size_t(i)] = i % 4;
  const AccuracyReport report = evaluate_accuracy(model, data, labels);
  CHECK(report.overall == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(report.per_class_recall[0] == 1.0);
  CHECK(report.per_class_recall[1] == 0.0);
}

TEST_CASE("classes absent from the set report NaN recall") {
  RngStream rng(22);
  std::vector<Rbm> stack;
  stack.push_back(init_rbm(4, 3, rng));
  const DbnClassifier model = make_classifier(std::move(stack), 4);
  const Eigen::MatrixXd data = random_unit_batch(6, 4, rng);
  std::vector<int> labels = {0, 0, 1, 1, 2, 2};  // class 3 absent
  const AccuracyReport report = evaluate_accuracy(model, data, labels);
  CHECK(std::isnan(report.per_class_recall[3]));
  CHECK_FALSE(std::isnan(report.per_class_recall[0]));
}
