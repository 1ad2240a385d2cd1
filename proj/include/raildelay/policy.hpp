#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "raildelay/mdp.hpp"
#include "raildelay/rng.hpp"

namespace raildelay {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kDefaultWeightDecay = 0.001;

enum class Head { Softmax3, LinearK };

/// Feed-forward network with rectifier hidden layers and either a 3-way
/// softmax head (action policy) or a linear K-dim head (regression baseline).
/// He-initialised weights, zero biases. Training updates go through AdamW.
template <typename Scalar = double>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Vector<Scalar, Eigen::Dynamic>;

  struct Gradients {
    std::vector<Matrix> w;
    std::vector<Vector> b;
  };

  Mlp() = default;

  Mlp(std::vector<int> layer_dims, Head head, std::uint64_t seed)
      : dims_(std::move(layer_dims)), head_(head) {
    if (dims_.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
    if (head_ == Head::Softmax3 && dims_.back() != kNumActions) {
      throw std::invalid_argument("mlp: softmax head requires 3 outputs");
    }
    Rng rng(seed);
    const std::size_t layers = dims_.size() - 1;
    w_.resize(layers);
    b_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      const int fan_in = dims_[l];
      const int fan_out = dims_[l + 1];
      const double stddev = std::sqrt(2.0 / fan_in);
      w_[l].resize(fan_out, fan_in);
      for (int r = 0; r < fan_out; ++r) {
        for (int c = 0; c < fan_in; ++c) {
          w_[l](r, c) = static_cast<Scalar>(normal_sample(rng, 0.0, stddev));
        }
      }
      b_[l] = Vector::Zero(fan_out);
    }
    reset_optimizer();
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  Head head() const { return head_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t n_layers() const { return w_.size(); }
  std::int64_t adam_step_count() const { return adam_t_; }

  std::vector<Matrix>& weights() { return w_; }
  std::vector<Vector>& biases() { return b_; }
  const std::vector<Matrix>& weights() const { return w_; }
  const std::vector<Vector>& biases() const { return b_; }

  void reset_optimizer() {
    adam_t_ = 0;
    mw_.assign(w_.size(), Matrix());
    vw_.assign(w_.size(), Matrix());
    mb_.assign(b_.size(), Vector());
    vb_.assign(b_.size(), Vector());
    for (std::size_t l = 0; l < w_.size(); ++l) {
      mw_[l] = Matrix::Zero(w_[l].rows(), w_[l].cols());
      vw_[l] = Matrix::Zero(w_[l].rows(), w_[l].cols());
      mb_[l] = Vector::Zero(b_[l].size());
      vb_[l] = Vector::Zero(b_[l].size());
    }
  }

  /// Softmax probabilities (Softmax3) or raw linear outputs (LinearK).
  Vector forward(const Vector& x) const {
    if (x.size() != dims_.front()) throw std::invalid_argument("mlp: input dimension mismatch");
    Vector a = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      a = (w_[l] * a + b_[l]).eval();
      if (l + 1 < w_.size()) a = a.cwiseMax(Scalar(0));
    }
    if (head_ == Head::Softmax3) return softmax(a);
    return a;
  }

  /// Column-per-sample batch forward; same head handling as forward().
  Matrix forward_batch(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      a = ((w_[l] * a).colwise() + b_[l]).eval();
      if (l + 1 < w_.size()) a = a.cwiseMax(Scalar(0));
    }
    if (head_ == Head::Softmax3) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) a.col(c) = softmax(a.col(c));
    }
    return a;
  }

  Gradients zero_gradients() const {
    Gradients g;
    g.w.reserve(w_.size());
    g.b.reserve(b_.size());
    for (std::size_t l = 0; l < w_.size(); ++l) {
      g.w.push_back(Matrix::Zero(w_[l].rows(), w_[l].cols()));
      g.b.push_back(Vector::Zero(b_[l].size()));
    }
    return g;
  }

  /// Weighted cross-entropy over a batch (columns of x): accumulates the
  /// summed gradient sum_i w_i * dL_i/dtheta and returns the mean weighted
  /// loss. Softmax head only.
  Scalar ce_gradient(const Matrix& x, const std::vector<int>& targets, const Vector& weights,
                     Gradients& grads) const {
    if (head_ != Head::Softmax3) throw std::logic_error("ce_gradient: needs softmax head");
    return backprop(x, grads, [&](const Matrix& out, Matrix& delta) {
      Scalar loss = 0;
      delta = out;
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const int t = targets[static_cast<std::size_t>(c)];
        const Scalar p = std::max(out(t, c), Scalar(1e-300));
        loss += weights(c) * -std::log(p);
        delta(t, c) -= Scalar(1);
        delta.col(c) *= weights(c);
      }
      return loss;
    });
  }

  /// Masked squared-error over a batch: per sample sums (y_hat - y)^2 over
  /// unmasked components; masked components contribute exactly zero gradient.
  Scalar l2_gradient(const Matrix& x, const Matrix& targets, const Matrix& mask,
                     Gradients& grads) const {
    if (head_ != Head::LinearK) throw std::logic_error("l2_gradient: needs linear head");
    return backprop(x, grads, [&](const Matrix& out, Matrix& delta) {
      const Matrix residual = (out - targets).cwiseProduct(mask);
      delta = Scalar(2) * residual;
      return residual.squaredNorm();
    });
  }

  /// One AdamW update from summed gradients: decoupled weight decay, bias
  /// correction, shared step counter.
  void adam_step(const Gradients& grads, Scalar lr, Scalar weight_decay) {
    ++adam_t_;
    const Scalar bc1 = Scalar(1) - std::pow(Scalar(kAdamBeta1), Scalar(adam_t_));
    const Scalar bc2 = Scalar(1) - std::pow(Scalar(kAdamBeta2), Scalar(adam_t_));
    for (std::size_t l = 0; l < w_.size(); ++l) {
      update(w_[l], mw_[l], vw_[l], grads.w[l], lr, weight_decay, bc1, bc2);
      update(b_[l], mb_[l], vb_[l], grads.b[l], lr, weight_decay, bc1, bc2);
    }
    for (std::size_t l = 0; l < w_.size(); ++l) {
      if (!w_[l].allFinite() || !b_[l].allFinite()) {
        throw std::runtime_error("mlp: non-finite parameters after update");
      }
    }
  }

 private:
  static Vector softmax(const Vector& z) {
    const Scalar m = z.maxCoeff();
    Vector e = (z.array() - m).exp();
    return e / e.sum();
  }

  template <typename LossFn>
  Scalar backprop(const Matrix& x, Gradients& grads, LossFn&& loss_fn) const {
    if (x.rows() != dims_.front()) throw std::invalid_argument("mlp: input dimension mismatch");
    const Eigen::Index batch = x.cols();
    if (batch == 0) throw std::invalid_argument("mlp: empty batch");

    std::vector<Matrix> acts;  // post-activation per layer, acts[0] = input
    acts.reserve(w_.size() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < w_.size(); ++l) {
      Matrix z = (w_[l] * acts.back()).colwise() + b_[l];
      if (l + 1 < w_.size()) z = z.cwiseMax(Scalar(0));
      acts.push_back(std::move(z));
    }
    Matrix out = acts.back();
    if (head_ == Head::Softmax3) {
      for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) = softmax(out.col(c));
    }

    Matrix delta;
    const Scalar total_loss = loss_fn(out, delta);
    if (!std::isfinite(static_cast<double>(total_loss)) || !delta.allFinite()) {
      throw std::runtime_error("mlp: non-finite loss or gradient");
    }

    for (std::size_t l = w_.size(); l-- > 0;) {
      grads.w[l].noalias() += delta * acts[l].transpose();
      grads.b[l] += delta.rowwise().sum();
      if (l > 0) {
        delta = (w_[l].transpose() * delta).cwiseProduct(
            (acts[l].array() > Scalar(0)).template cast<Scalar>().matrix());
      }
    }
    return total_loss / static_cast<Scalar>(batch);
  }

  template <typename Param>
  static void update(Param& theta, Param& m, Param& v, const Param& g, Scalar lr,
                     Scalar weight_decay, Scalar bc1, Scalar bc2) {
    m = Scalar(kAdamBeta1) * m + (Scalar(1) - Scalar(kAdamBeta1)) * g;
    v = Scalar(kAdamBeta2) * v + (Scalar(1) - Scalar(kAdamBeta2)) * g.cwiseProduct(g);
    theta.array() -= lr * weight_decay * theta.array();
    theta.array() -= lr * (m / bc1).array() / ((v / bc2).array().sqrt() + Scalar(kAdamEpsilon));
  }

  std::vector<int> dims_;
  Head head_ = Head::Softmax3;
  std::vector<Matrix> w_;
  std::vector<Vector> b_;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
  std::int64_t adam_t_ = 0;
};

using MlpPolicy = Mlp<double>;

/// Replay-buffer entry and train_step input: encoded state, synthetic action,
/// drift weight in (0,1].
struct TrainingSample {
  Eigen::VectorXd features;
  Action action;
  double weight = 1.0;
};

/// Inverse-CDF draw over the fixed category order (0,1,2).
Action sample_action(const Eigen::VectorXd& dist, Rng& rng);

/// Greedy argmax (first index on ties); ablation path for rollouts.
Action greedy_action(const Eigen::VectorXd& dist);

/// Raises the a=1 mass to the running floor, then renormalises.
Eigen::VectorXd stall_clamp(const Eigen::VectorXd& dist, double floor);

/// One weighted cross-entropy Adam update (summed gradients, Eq-style
/// weighting); returns the mean weighted loss over the batch.
double train_step(MlpPolicy& policy, std::span<const TrainingSample> batch, double lr,
                  double weight_decay = kDefaultWeightDecay);

}  // namespace raildelay
