#include "airn/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace airn {

namespace {

double sigmoid_scalar(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch_range(const Eigen::MatrixXd& batch) {
  if (batch.rows() == 0 || batch.cols() == 0) {
    throw std::invalid_argument("cd1_update: empty batch");
  }
  if (batch.minCoeff() < 0.0 || batch.maxCoeff() > 1.0) {
    throw std::invalid_argument("cd1_update: visible values outside [0,1]");
  }
}

// Forward pass over a batch; returns activations for every layer,
// activations[0] being the input.
std::vector<Eigen::MatrixXd> forward_stack(const DbnClassifier& model,
                                           const Eigen::MatrixXd& data) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(data);
  for (const Rbm& rbm : model.layers) {
    acts.push_back(sigmoid(
        (acts.back() * rbm.w).rowwise() + rbm.b_hidden.transpose()));
  }
  return acts;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  return p.array().colwise() / p.rowwise().sum().array();
}

void check_labels(const std::vector<int>& labels, Eigen::Index n_rows,
                  int n_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != n_rows) {
    throw std::invalid_argument("label count does not match data rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= n_classes) {
      throw std::invalid_argument("label " + std::to_string(y) +
                                  " out of range [0, " +
                                  std::to_string(n_classes) + ")");
    }
  }
}

}  // namespace

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return sigmoid_scalar(v); });
}

Eigen::VectorXd rbm_propagate(const Rbm& rbm, const Eigen::VectorXd& v_or_h,
                              Direction direction) {
  if (direction == Direction::Up) {
    if (v_or_h.size() != rbm.n_visible()) {
      throw std::invalid_argument("rbm_propagate: expected visible-length vector");
    }
    return sigmoid(rbm.w.transpose() * v_or_h + rbm.b_hidden);
  }
  if (v_or_h.size() != rbm.n_hidden()) {
    throw std::invalid_argument("rbm_propagate: expected hidden-length vector");
  }
  return sigmoid(rbm.w * v_or_h + rbm.b_visible);
}

Rbm init_rbm(int n_visible, int n_hidden, RngStream& rng) {
  if (n_visible < 1 || n_hidden < 1) {
    throw std::invalid_argument("init_rbm: layer sizes must be >= 1");
  }
  Rbm rbm;
  rbm.w.resize(n_visible, n_hidden);
  for (Eigen::Index i = 0; i < rbm.w.rows(); ++i) {
    for (Eigen::Index j = 0; j < rbm.w.cols(); ++j) {
      rbm.w(i, j) = 0.01 * rng.next_gaussian();
    }
  }
  rbm.b_visible = Eigen::VectorXd::Zero(n_visible);
  rbm.b_hidden = Eigen::VectorXd::Zero(n_hidden);
  return rbm;
}

double cd1_update(Rbm& rbm, const Eigen::MatrixXd& batch,
                  const TrainConfig& cfg, RngStream& rng,
                  Cd1Velocity* velocity) {
  check_batch_range(batch);
  if (batch.cols() != rbm.n_visible()) {
    throw std::invalid_argument("cd1_update: batch width != n_visible");
  }
  const double inv_b = 1.0 / static_cast<double>(batch.rows());

  Eigen::MatrixXd h_prob = sigmoid(
      (batch * rbm.w).rowwise() + rbm.b_hidden.transpose());
  Eigen::MatrixXd h_state = h_prob;
  if (!cfg.mean_field) {
    for (Eigen::Index r = 0; r < h_state.rows(); ++r) {
      for (Eigen::Index c = 0; c < h_state.cols(); ++c) {
        h_state(r, c) = rng.next_uniform() < h_prob(r, c) ? 1.0 : 0.0;
      }
    }
  }
  const Eigen::MatrixXd v_recon = sigmoid(
      (h_state * rbm.w.transpose()).rowwise() + rbm.b_visible.transpose());
  const Eigen::MatrixXd h_recon = sigmoid(
      (v_recon * rbm.w).rowwise() + rbm.b_hidden.transpose());

  const Eigen::MatrixXd grad_w =
      inv_b * (batch.transpose() * h_prob - v_recon.transpose() * h_recon);
  const Eigen::VectorXd grad_bv = inv_b * (batch - v_recon).colwise().sum();
  const Eigen::VectorXd grad_bh = inv_b * (h_prob - h_recon).colwise().sum();

  if (velocity != nullptr) {
    if (velocity->dw.size() == 0) {
      velocity->dw = Eigen::MatrixXd::Zero(rbm.w.rows(), rbm.w.cols());
      velocity->db_visible = Eigen::VectorXd::Zero(rbm.n_visible());
      velocity->db_hidden = Eigen::VectorXd::Zero(rbm.n_hidden());
    }
    velocity->dw = cfg.momentum * velocity->dw + cfg.learning_rate * grad_w;
    velocity->db_visible =
        cfg.momentum * velocity->db_visible + cfg.learning_rate * grad_bv;
    velocity->db_hidden =
        cfg.momentum * velocity->db_hidden + cfg.learning_rate * grad_bh;
    rbm.w += velocity->dw;
    rbm.b_visible += velocity->db_visible;
    rbm.b_hidden += velocity->db_hidden;
  } else {
    rbm.w += cfg.learning_rate * grad_w;
    rbm.b_visible += cfg.learning_rate * grad_bv;
    rbm.b_hidden += cfg.learning_rate * grad_bh;
  }
  return (batch - v_recon).rowwise().squaredNorm().mean();
}

std::vector<Rbm> pretrain(const std::vector<int>& layer_sizes,
                          const Eigen::MatrixXd& data, const TrainConfig& cfg,
                          RngStream& rng,
                          std::vector<std::vector<double>>* recon_log) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("pretrain: need at least one hidden layer");
  }
  if (data.cols() != layer_sizes.front()) {
    throw std::invalid_argument("pretrain: data dimension " +
                                std::to_string(data.cols()) +
                                " != layer_sizes[0] = " +
                                std::to_string(layer_sizes.front()));
  }
  if (data.rows() == 0) {
    throw std::invalid_argument("pretrain: empty data");
  }
  if (recon_log != nullptr) recon_log->clear();

  std::vector<Rbm> stack;
  stack.reserve(layer_sizes.size() - 1);
  Eigen::MatrixXd input = data;
  for (size_t layer = 0; layer + 1 < layer_sizes.size(); ++layer) {
    RngStream layer_rng = rng.substream(layer);
    Rbm rbm = init_rbm(layer_sizes[layer], layer_sizes[layer + 1], layer_rng);
    Cd1Velocity velocity;
    std::vector<double> epoch_errors;
    const Eigen::Index n = input.rows();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      double err_sum = 0.0;
      int n_batches = 0;
      for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
        const Eigen::Index rows = std::min<Eigen::Index>(cfg.batch_size, n - start);
        err_sum += cd1_update(rbm, input.middleRows(start, rows), cfg,
                              layer_rng, &velocity);
        ++n_batches;
      }
      epoch_errors.push_back(err_sum / n_batches);
    }
    if (recon_log != nullptr) recon_log->push_back(std::move(epoch_errors));

    // Lift the data through the trained layer for the next RBM.
    Eigen::MatrixXd lifted = sigmoid(
        (input * rbm.w).rowwise() + rbm.b_hidden.transpose());
    if (!cfg.mean_field) {
      for (Eigen::Index r = 0; r < lifted.rows(); ++r) {
        for (Eigen::Index c = 0; c < lifted.cols(); ++c) {
          lifted(r, c) = layer_rng.next_uniform() < lifted(r, c) ? 1.0 : 0.0;
        }
      }
    }
    input = std::move(lifted);
    stack.push_back(std::move(rbm));
  }
  return stack;
}

DbnClassifier make_classifier(std::vector<Rbm> stack, int n_classes) {
  if (stack.empty()) {
    throw std::invalid_argument("make_classifier: empty stack");
  }
  if (n_classes < 2) {
    throw std::invalid_argument("make_classifier: need at least two classes");
  }
  DbnClassifier model;
  model.layer_sizes.push_back(static_cast<int>(stack.front().n_visible()));
  for (size_t i = 0; i < stack.size(); ++i) {
    if (i > 0 && stack[i].n_visible() != stack[i - 1].n_hidden()) {
      throw std::invalid_argument("make_classifier: layer dimensions do not chain");
    }
    model.layer_sizes.push_back(static_cast<int>(stack[i].n_hidden()));
  }
  model.head_w = Eigen::MatrixXd::Zero(stack.back().n_hidden(), n_classes);
  model.head_b = Eigen::VectorXd::Zero(n_classes);
  model.n_classes = n_classes;
  model.layers = std::move(stack);
  return model;
}

DbnGradients dbn_loss_gradients(const DbnClassifier& model,
                                const Eigen::MatrixXd& data,
                                const std::vector<int>& labels) {
  check_labels(labels, data.rows(), model.n_classes);
  const Eigen::Index b = data.rows();
  const double inv_b = 1.0 / static_cast<double>(b);

  const std::vector<Eigen::MatrixXd> acts = forward_stack(model, data);
  const Eigen::MatrixXd logits =
      (acts.back() * model.head_w).rowwise() + model.head_b.transpose();
  const Eigen::MatrixXd probs = softmax_rows(logits);

  DbnGradients g;
  for (Eigen::Index i = 0; i < b; ++i) {
    g.loss -= std::log(std::max(probs(i, labels[static_cast<size_t>(i)]),
                                1e-300));
  }
  g.loss *= inv_b;

  Eigen::MatrixXd dlogits = probs;
  for (Eigen::Index i = 0; i < b; ++i) {
    dlogits(i, labels[static_cast<size_t>(i)]) -= 1.0;
  }
  dlogits *= inv_b;

  g.head_w = acts.back().transpose() * dlogits;
  g.head_b = dlogits.colwise().sum();
  g.layer_w.resize(model.layers.size());
  g.layer_b.resize(model.layers.size());

  Eigen::MatrixXd da = dlogits * model.head_w.transpose();
  for (size_t l = model.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& a = acts[l + 1];
    const Eigen::MatrixXd dz =
        da.array() * a.array() * (1.0 - a.array());
    g.layer_w[l] = acts[l].transpose() * dz;
    g.layer_b[l] = dz.colwise().sum();
    if (l > 0) da = dz * model.layers[l].w.transpose();
  }
  return g;
}

double fine_tune(DbnClassifier& model, const Eigen::MatrixXd& data,
                 const std::vector<int>& labels, const TrainConfig& cfg,
                 RngStream& rng, std::vector<double>* loss_log) {
  check_labels(labels, data.rows(), model.n_classes);
  if (loss_log != nullptr) loss_log->clear();
  const Eigen::Index n = data.rows();

  Eigen::MatrixXd vel_head_w = Eigen::MatrixXd::Zero(model.head_w.rows(),
                                                     model.head_w.cols());
  Eigen::VectorXd vel_head_b = Eigen::VectorXd::Zero(model.head_b.size());
  std::vector<Eigen::MatrixXd> vel_w;
  std::vector<Eigen::VectorXd> vel_b;
  for (const Rbm& rbm : model.layers) {
    vel_w.push_back(Eigen::MatrixXd::Zero(rbm.w.rows(), rbm.w.cols()));
    vel_b.push_back(Eigen::VectorXd::Zero(rbm.n_hidden()));
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  double final_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates from the stream keeps epochs deterministic.
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    int n_batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index rows = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd batch(rows, data.cols());
      std::vector<int> batch_labels(static_cast<size_t>(rows));
      for (Eigen::Index r = 0; r < rows; ++r) {
        batch.row(r) = data.row(order[static_cast<size_t>(start + r)]);
        batch_labels[static_cast<size_t>(r)] =
            labels[static_cast<size_t>(order[static_cast<size_t>(start + r)])];
      }
      const DbnGradients g = dbn_loss_gradients(model, batch, batch_labels);
      loss_sum += g.loss;
      ++n_batches;

      vel_head_w = cfg.momentum * vel_head_w - cfg.learning_rate * g.head_w;
      vel_head_b = cfg.momentum * vel_head_b - cfg.learning_rate * g.head_b;
      model.head_w += vel_head_w;
      model.head_b += vel_head_b;
      for (size_t l = 0; l < model.layers.size(); ++l) {
        vel_w[l] = cfg.momentum * vel_w[l] - cfg.learning_rate * g.layer_w[l];
        vel_b[l] = cfg.momentum * vel_b[l] - cfg.learning_rate * g.layer_b[l];
        model.layers[l].w += vel_w[l];
        model.layers[l].b_hidden += vel_b[l];
      }
    }
    final_loss = loss_sum / n_batches;
    if (loss_log != nullptr) loss_log->push_back(final_loss);
  }
  return final_loss;
}

Eigen::VectorXd predict(const DbnClassifier& model,
                        const Eigen::VectorXd& features) {
  if (features.size() != model.layers.front().n_visible()) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  Eigen::VectorXd a = features;
  for (const Rbm& rbm : model.layers) {
    a = sigmoid(rbm.w.transpose() * a + rbm.b_hidden);
  }
  Eigen::VectorXd logits = model.head_w.transpose() * a + model.head_b;
  logits.array() -= logits.maxCoeff();
  Eigen::VectorXd p = logits.array().exp();
  return p / p.sum();
}

AccuracyReport evaluate_accuracy(const DbnClassifier& model,
                                 const Eigen::MatrixXd& data,
                                 const std::vector<int>& labels) {
  check_labels(labels, data.rows(), model.n_classes);
  if (data.rows() == 0) {
    throw std::invalid_argument("evaluate_accuracy: empty dataset");
  }
  Eigen::VectorXd correct = Eigen::VectorXd::Zero(model.n_classes);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(model.n_classes);
  Eigen::Index n_correct = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Eigen::VectorXd p = predict(model, data.row(i).transpose());
    Eigen::Index arg = 0;
    p.maxCoeff(&arg);
    const int y = labels[static_cast<size_t>(i)];
    total[y] += 1.0;
    if (arg == y) {
      correct[y] += 1.0;
      ++n_correct;
    }
  }
  AccuracyReport report;
  report.overall = static_cast<double>(n_correct) / static_cast<double>(data.rows());
  report.per_class_recall.resize(model.n_classes);
  for (int c = 0; c < model.n_classes; ++c) {
    report.per_class_recall[c] =
        total[c] > 0.0 ? correct[c] / total[c]
                       : std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace airn
