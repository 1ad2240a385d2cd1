#include "raildelay/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace raildelay {

namespace {

void check_distribution(const Eigen::VectorXd& dist) {
  if (dist.size() != kNumActions) {
    throw std::invalid_argument("action distribution must have 3 entries");
  }
  if (dist.minCoeff() < 0.0 || std::abs(dist.sum() - 1.0) > 1e-6) {
    throw std::invalid_argument("action distribution not normalised");
  }
}

}  // namespace

Action sample_action(const Eigen::VectorXd& dist, Rng& rng) {
  check_distribution(dist);
  const double u = uniform_unit(rng);
  double cum = 0.0;
  for (int a = 0; a < kNumActions - 1; ++a) {
    cum += dist(a);
    if (u < cum) return Action(a);
  }
  return Action(kNumActions - 1);
}

Action greedy_action(const Eigen::VectorXd& dist) {
  check_distribution(dist);
  int best = 0;
  for (int a = 1; a < kNumActions; ++a) {
    if (dist(a) > dist(best)) best = a;
  }
  return Action(best);
}

Eigen::VectorXd stall_clamp(const Eigen::VectorXd& dist, double floor) {
  check_distribution(dist);
  if (floor < 0.0 || floor > 1.0) throw std::invalid_argument("stall floor outside [0,1]");
  if (dist(1) >= floor) return dist;
  Eigen::VectorXd out = dist;
  out(1) = floor;
  out /= out.sum();
  return out;
}

double train_step(MlpPolicy& policy, std::span<const TrainingSample> batch, double lr,
                  double weight_decay) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const int d = policy.input_dim();
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(batch.size()));
  std::vector<int> targets(batch.size());
  Eigen::VectorXd weights(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].weight <= 0.0 || batch[i].weight > 1.0) {
      throw std::invalid_argument("train_step: weight outside (0,1]");
    }
    x.col(static_cast<Eigen::Index>(i)) = batch[i].features;
    targets[i] = batch[i].action.value;
    weights(static_cast<Eigen::Index>(i)) = batch[i].weight;
  }
  auto grads = policy.zero_gradients();
  const double mean_loss = policy.ce_gradient(x, targets, weights, grads);
  policy.adam_step(grads, lr, weight_decay);
  return mean_loss;
}

}  // namespace raildelay
