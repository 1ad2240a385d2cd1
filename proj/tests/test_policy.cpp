#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "raildelay/checkpoint.hpp"
#include "raildelay/policy.hpp"

using namespace raildelay;

namespace {

Eigen::VectorXd random_vector(int n, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * (2.0 * uniform_unit(rng) - 1.0);
  return v;
}

/// Straight-line re-implementation of the forward pass with plain loops; the
/// duplicate-arithmetic oracle for Mlp::forward.
Eigen::VectorXd forward_by_hand(const MlpPolicy& net, const Eigen::VectorXd& x) {
  std::vector<double> act(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto& w = net.weights()[l];
    const auto& b = net.biases()[l];
    std::vector<double> out(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double z = b(r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) z += w(r, c) * act[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = z;
    }
    if (l + 1 < net.n_layers()) {
      for (auto& z : out) z = z > 0.0 ? z : 0.0;
    }
    act = std::move(out);
  }
  if (net.head() == Head::Softmax3) {
    double m = act[0];
    for (double z : act) m = std::max(m, z);
    double sum = 0.0;
    for (auto& z : act) {
      z = std::exp(z - m);
      sum += z;
    }
    for (auto& z : act) z /= sum;
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(act.size()));
  for (std::size_t i = 0; i < act.size(); ++i) out(static_cast<Eigen::Index>(i)) = act[i];
  return out;
}

/// Total weighted cross-entropy over a batch, computed through forward() only.
double batch_ce_loss(const MlpPolicy& net, const std::vector<TrainingSample>& batch) {
  double total = 0.0;
  for (const auto& s : batch) {
    const Eigen::VectorXd p = net.forward(s.features);
    total += s.weight * -std::log(std::max(p(s.action.value), 1e-300));
  }
  return total;
}

std::vector<TrainingSample> random_batch(int d, int n, Rng& rng) {
  std::vector<TrainingSample> batch;
  for (int i = 0; i < n; ++i) {
    TrainingSample s;
    s.features = random_vector(d, rng);
    s.action = Action(static_cast<int>(uniform_index(rng, 3)));
    s.weight = 0.1 + 0.9 * uniform_unit(rng);
    batch.push_back(std::move(s));
  }
  return batch;
}

}  // namespace

TEST_CASE("forward: zero parameters give the uniform distribution") {
  MlpPolicy net({4, 6, 3}, Head::Softmax3, 1);
  for (auto& w : net.weights()) w.setZero();
  for (auto& b : net.biases()) b.setZero();
  Rng rng(2);
  const Eigen::VectorXd p = net.forward(random_vector(4, rng));
  for (int i = 0; i < 3; ++i) CHECK(p(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("forward: softmax output normalised on random inputs") {
  MlpPolicy net({10, 16, 8, 3}, Head::Softmax3, 3);
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd p = net.forward(random_vector(10, rng, 3.0));
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("forward matches the duplicate-arithmetic oracle") {
  Rng rng(5);
  MlpPolicy soft({7, 5, 4, 3}, Head::Softmax3, 6);
  MlpPolicy lin({7, 5, 4, 6}, Head::LinearK, 7);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = random_vector(7, rng, 2.0);
    CHECK((soft.forward(x) - forward_by_hand(soft, x)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((lin.forward(x) - forward_by_hand(lin, x)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("forward_batch agrees with forward") {
  Rng rng(8);
  MlpPolicy net({6, 9, 3}, Head::Softmax3, 9);
  Eigen::MatrixXd x(6, 5);
  for (int c = 0; c < 5; ++c) x.col(c) = random_vector(6, rng);
  const Eigen::MatrixXd out = net.forward_batch(x);
  for (int c = 0; c < 5; ++c) {
    CHECK((out.col(c) - net.forward(x.col(c))).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("forward rejects dimension mismatch") {
  MlpPolicy net({4, 3}, Head::Softmax3, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  CHECK_THROWS(net.forward(x));
}

TEST_CASE("sample_action") {
  Rng rng(10);
  SUBCASE("degenerate distributions are deterministic") {
    Eigen::Vector3d a{1.0, 0.0, 0.0};
    Eigen::Vector3d c{0.0, 0.0, 1.0};
    for (int i = 0; i < 1000; ++i) {
      CHECK(sample_action(a, rng).value == 0);
      CHECK(sample_action(c, rng).value == 2);
    }
  }
  SUBCASE("law of large numbers at 100k draws") {
    Eigen::Vector3d dist{0.5, 0.3, 0.2};
    std::array<int, 3> hits{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(sample_action(dist, rng).value)];
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(static_cast<double>(hits[static_cast<std::size_t>(a)]) / n - dist(a)) < 0.01);
    }
  }
  SUBCASE("rejects non-normalised input") {
    Eigen::Vector3d bad{0.5, 0.3, 0.5};
    CHECK_THROWS(sample_action(bad, rng));
  }
}

TEST_CASE("stall_clamp") {
  SUBCASE("zero floor is a no-op") {
    Eigen::Vector3d d{0.7, 0.2, 0.1};
    CHECK((stall_clamp(d, 0.0) - d).norm() == 0.0);
  }
  SUBCASE("clamp and renormalise") {
    Eigen::Vector3d d{0.98, 0.01, 0.01};
    const Eigen::VectorXd out = stall_clamp(d, 0.5);
    CHECK(out(0) == doctest::Approx(0.98 / 1.49));
    CHECK(out(1) == doctest::Approx(0.5 / 1.49));
    CHECK(out(2) == doctest::Approx(0.01 / 1.49));
  }
  SUBCASE("raises the stay-off mass and stays normalised") {
    Rng rng(12);
    for (int rep = 0; rep < 200; ++rep) {
      Eigen::Vector3d d;
      d << uniform_unit(rng) + 1e-3, uniform_unit(rng) + 1e-3, uniform_unit(rng) + 1e-3;
      d /= d.sum();
      const double mu = uniform_unit(rng);
      const Eigen::VectorXd out = stall_clamp(d, mu);
      CHECK(out(1) >= d(1) - 1e-15);
      CHECK(std::abs(out.sum() - 1.0) < 1e-12);
    }
  }
  SUBCASE("no-op whenever the mass already exceeds the floor") {
    // the fixed-point region: repeated application cannot change the output
    Eigen::Vector3d d{0.2, 0.5, 0.3};
    const Eigen::VectorXd once = stall_clamp(d, 0.4);
    const Eigen::VectorXd twice = stall_clamp(once, 0.4);
    CHECK((once - d).norm() == 0.0);
    CHECK((twice - once).norm() == 0.0);
  }
}

TEST_CASE("gradient matches central finite differences on a small net") {
  Rng rng(77);
  MlpPolicy net({5, 2, 3}, Head::Softmax3, 13);  // two hidden units
  const auto batch = random_batch(5, 6, rng);

  Eigen::MatrixXd x(5, 6);
  std::vector<int> targets(6);
  Eigen::VectorXd weights(6);
  for (int i = 0; i < 6; ++i) {
    x.col(i) = batch[static_cast<std::size_t>(i)].features;
    targets[static_cast<std::size_t>(i)] = batch[static_cast<std::size_t>(i)].action.value;
    weights(i) = batch[static_cast<std::size_t>(i)].weight;
  }
  auto grads = net.zero_gradients();
  net.ce_gradient(x, targets, weights, grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    for (Eigen::Index r = 0; r < net.weights()[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights()[l].cols(); ++c) {
        MlpPolicy plus = net, minus = net;
        plus.weights()[l](r, c) += h;
        minus.weights()[l](r, c) -= h;
        const double fd = (batch_ce_loss(plus, batch) - batch_ce_loss(minus, batch)) / (2 * h);
        const double an = grads.w[l](r, c);
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        max_rel = std::max(max_rel, rel);
      }
    }
    for (Eigen::Index r = 0; r < net.biases()[l].size(); ++r) {
      MlpPolicy plus = net, minus = net;
      plus.biases()[l](r) += h;
      minus.biases()[l](r) -= h;
      const double fd = (batch_ce_loss(plus, batch) - batch_ce_loss(minus, batch)) / (2 * h);
      const double an = grads.b[l](r);
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("gradient scales linearly with the sample weight") {
  Rng rng(31);
  MlpPolicy net({6, 4, 3}, Head::Softmax3, 17);
  TrainingSample s;
  s.features = random_vector(6, rng);
  s.action = Action(1);

  Eigen::MatrixXd x(6, 1);
  x.col(0) = s.features;
  const std::vector<int> targets = {1};

  auto g_full = net.zero_gradients();
  auto g_tiny = net.zero_gradients();
  Eigen::VectorXd w1(1), w2(1);
  w1 << 1.0;
  w2 << 1e-12;
  net.ce_gradient(x, targets, w1, g_full);
  net.ce_gradient(x, targets, w2, g_tiny);
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    CHECK((g_tiny.w[l] - 1e-12 * g_full.w[l]).lpNorm<Eigen::Infinity>() < 1e-24);
    // near-zero weights leave almost no gradient signal
    CHECK(g_tiny.w[l].lpNorm<Eigen::Infinity>() <= 1e-6 * g_full.w[l].lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("train_step with unit weight equals the plain cross-entropy gradient step") {
  Rng rng(41);
  TrainingSample s;
  s.features = random_vector(6, rng);
  s.action = Action(2);
  s.weight = 1.0;

  MlpPolicy a({6, 4, 3}, Head::Softmax3, 19);
  MlpPolicy b = a;

  // path 1: the public train_step
  train_step(a, std::vector<TrainingSample>{s}, 1e-3, 0.0);

  // path 2: explicit gradient + adam
  Eigen::MatrixXd x(6, 1);
  x.col(0) = s.features;
  Eigen::VectorXd w(1);
  w << 1.0;
  auto grads = b.zero_gradients();
  b.ce_gradient(x, {2}, w, grads);
  b.adam_step(grads, 1e-3, 0.0);

  for (std::size_t l = 0; l < a.n_layers(); ++l) {
    CHECK((a.weights()[l] - b.weights()[l]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.biases()[l] - b.biases()[l]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("train_step validates the batch") {
  MlpPolicy net({4, 3}, Head::Softmax3, 1);
  CHECK_THROWS(train_step(net, std::vector<TrainingSample>{}, 1e-3));
  TrainingSample s;
  s.features = Eigen::VectorXd::Zero(4);
  s.action = Action(0);
  s.weight = 1.5;  // outside (0,1]
  CHECK_THROWS(train_step(net, std::vector<TrainingSample>{s}, 1e-3));
}

TEST_CASE("loss falls by at least half after 200 steps on a fixed batch") {
  Rng rng(53);
  MlpPolicy net({20, 8, 3}, Head::Softmax3, 23);
  const auto batch = random_batch(20, 32, rng);
  const double before = batch_ce_loss(net, batch) / 32.0;
  double last = before;
  for (int i = 0; i < 200; ++i) last = train_step(net, batch, 1e-3);
  CHECK(last < 0.5 * before);
}

TEST_CASE("adam with zero gradient only applies weight decay shrinkage") {
  MlpPolicy net({4, 5, 3}, Head::Softmax3, 29);
  const auto w_before = net.weights();
  auto zero = net.zero_gradients();
  const double lr = 1e-3;
  const double wd = 0.001;
  net.adam_step(zero, lr, wd);
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const Eigen::MatrixXd expected = (1.0 - lr * wd) * w_before[l];
    CHECK((net.weights()[l] - expected).lpNorm<Eigen::Infinity>() < 1e-15);
    CHECK(net.biases()[l].lpNorm<Eigen::Infinity>() == 0.0);  // zero bias stays zero
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Rng rng(61);
  MlpPolicy net({12, 7, 3}, Head::Softmax3, 31);
  Checkpoint ckpt;
  ckpt.policy = net;
  ckpt.method = "bc";
  ckpt.stats.fitted = true;
  for (std::size_t r = 0; r < 5; ++r) {
    ckpt.stats.count_min[r] = 0.25 * static_cast<double>(r);
    ckpt.stats.count_max[r] = 3.0 + static_cast<double>(r) / 3.0;
  }
  ckpt.seed = 42;
  ckpt.config_hash = 0xdeadbeefcafe1234ull;

  std::stringstream ss;
  save_checkpoint(ckpt, ss);
  const Checkpoint back = load_checkpoint(ss);

  CHECK(back.method == "bc");
  CHECK(back.seed == 42);
  CHECK(back.config_hash == 0xdeadbeefcafe1234ull);
  CHECK(back.stats.count_max == ckpt.stats.count_max);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd x = random_vector(12, rng, 2.0);
    CHECK((net.forward(x) - back.policy.forward(x)).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("checkpoint rejects truncation, layout mismatch and bad dims") {
  MlpPolicy net({5, 4, 3}, Head::Softmax3, 37);
  Checkpoint ckpt;
  ckpt.policy = net;
  ckpt.method = "dcil";
  ckpt.stats.fitted = true;
  std::stringstream ss;
  save_checkpoint(ckpt, ss);
  const std::string full = ss.str();

  SUBCASE("truncated file") {
    std::stringstream cut(full.substr(0, full.size() / 2));
    CHECK_THROWS(load_checkpoint(cut));
  }
  SUBCASE("layout version mismatch") {
    std::stringstream ok(full);
    CHECK_THROWS(load_checkpoint(ok, kLayoutVersion + 1));
  }
  SUBCASE("parameter block inconsistent with declared dims") {
    std::string damaged = full;
    const auto pos = damaged.find("weights 0 4 5");
    REQUIRE(pos != std::string::npos);
    damaged.replace(pos, 13, "weights 0 4 6");
    std::stringstream bad(damaged);
    CHECK_THROWS(load_checkpoint(bad));
  }
  SUBCASE("garbage header") {
    std::stringstream bad("not-a-checkpoint 1 2 3");
    CHECK_THROWS(load_checkpoint(bad));
  }
}

TEST_CASE("initialisation is seeded and deterministic") {
  MlpPolicy a({8, 6, 3}, Head::Softmax3, 99);
  MlpPolicy b({8, 6, 3}, Head::Softmax3, 99);
  MlpPolicy c({8, 6, 3}, Head::Softmax3, 100);
  bool differs = false;
  for (std::size_t l = 0; l < a.n_layers(); ++l) {
    CHECK((a.weights()[l] - b.weights()[l]).lpNorm<Eigen::Infinity>() == 0.0);
    if ((a.weights()[l] - c.weights()[l]).lpNorm<Eigen::Infinity>() > 0.0) differs = true;
  }
  CHECK(differs);
}
