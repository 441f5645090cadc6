#pragma once

#include <vector>

#include <Eigen/Dense>

#include "airn/rng.hpp"

namespace airn {

/// Bipartite energy model: no visible-visible or hidden-hidden couplings.
struct Rbm {
  Eigen::MatrixXd w;          // n_visible x n_hidden
  Eigen::VectorXd b_visible;  // n_visible
  Eigen::VectorXd b_hidden;   // n_hidden

  Eigen::Index n_visible() const { return w.rows(); }
  Eigen::Index n_hidden() const { return w.cols(); }
};

/// RBM stack converted to a feedforward sigmoid network with a softmax head.
struct DbnClassifier {
  std::vector<Rbm> layers;
  Eigen::MatrixXd head_w;  // n_top x n_classes
  Eigen::VectorXd head_b;  // n_classes
  std::vector<int> layer_sizes;  // visible dim followed by each hidden dim
  int n_classes = 0;
};

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.5;
  int epochs = 30;
  int batch_size = 32;
  bool mean_field = false;  // deterministic CD-1 (skip hidden sampling)
};

enum class Direction { Up, Down };

/// Momentum state carried across cd1_update calls.
struct Cd1Velocity {
  Eigen::MatrixXd dw;
  Eigen::VectorXd db_visible;
  Eigen::VectorXd db_hidden;
};

/// Logistic sigmoid applied elementwise; numerically stable in both tails.
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z);

/// Up: sigma(W^T v + b_hidden). Down: sigma(W h + b_visible).
Eigen::VectorXd rbm_propagate(const Rbm& rbm, const Eigen::VectorXd& v_or_h,
                              Direction direction);

/// Small-Gaussian weight init (sd 0.01), zero biases; deterministic in rng.
Rbm init_rbm(int n_visible, int n_hidden, RngStream& rng);

/// One CD-1 step over a batch (rows are visible vectors, values in [0,1]):
/// h_p = up(v); h = sample(h_p) unless mean_field; v' = down(h);
/// h'_p = up(v'); deltas are (lr/batch)*(v^T h_p - v'^T h'_p) and the bias
/// analogues, accumulated through `velocity` with cfg.momentum.
/// Returns the mean reconstruction error ||v - v'||^2 over the batch.
double cd1_update(Rbm& rbm, const Eigen::MatrixXd& batch,
                  const TrainConfig& cfg, RngStream& rng,
                  Cd1Velocity* velocity = nullptr);

/// Greedy layer-wise pretraining: trains layer_sizes[0] x layer_sizes[1] on
/// the data, propagates the data upward (probabilities in mean_field mode,
/// samples otherwise) and repeats for each next layer. Batches are visited
/// in data order. recon_log, when given, receives one per-epoch mean
/// reconstruction error vector per layer.
std::vector<Rbm> pretrain(const std::vector<int>& layer_sizes,
                          const Eigen::MatrixXd& data, const TrainConfig& cfg,
                          RngStream& rng,
                          std::vector<std::vector<double>>* recon_log = nullptr);

/// Wraps a pretrained stack with a zero-initialized softmax head.
DbnClassifier make_classifier(std::vector<Rbm> stack, int n_classes);

struct DbnGradients {
  double loss = 0.0;  // mean cross-entropy over the batch
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;
  std::vector<Eigen::MatrixXd> layer_w;
  std::vector<Eigen::VectorXd> layer_b;
};

/// Mean cross-entropy and its gradients for a labeled batch (full
/// backpropagation through the sigmoid stack and the softmax head).
DbnGradients dbn_loss_gradients(const DbnClassifier& model,
                                const Eigen::MatrixXd& data,
                                const std::vector<int>& labels);

/// Supervised fine-tuning: mini-batch gradient descent with momentum on the
/// cross-entropy loss. Sample order is reshuffled each epoch from rng.
/// Returns the final epoch's mean loss; loss_log receives one entry per epoch.
double fine_tune(DbnClassifier& model, const Eigen::MatrixXd& data,
                 const std::vector<int>& labels, const TrainConfig& cfg,
                 RngStream& rng, std::vector<double>* loss_log = nullptr);

/// Deterministic forward pass; returns class probabilities summing to 1.
Eigen::VectorXd predict(const DbnClassifier& model,
                        const Eigen::VectorXd& features);

struct AccuracyReport {
  double overall = 0.0;
  Eigen::VectorXd per_class_recall;  // NaN for classes absent from the set
};

AccuracyReport evaluate_accuracy(const DbnClassifier& model,
                                 const Eigen::MatrixXd& data,
                                 const std::vector<int>& labels);

}  // namespace airn
