#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <sstream>

#include "raildelay/jacobi.hpp"
#include "raildelay/network.hpp"
#include "raildelay/rng.hpp"

using namespace raildelay;

namespace {

RailNetwork random_connected_network(Rng& rng, int n, double extra_edge_prob = 0.15) {
  std::vector<std::string> stations;
  for (int i = 0; i < n; ++i) stations.push_back("S" + std::to_string(100 + i));
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 1; i < n; ++i) {
    const int parent = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(i)));
    edges.emplace_back(stations[static_cast<std::size_t>(parent)],
                       stations[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (uniform_unit(rng) < extra_edge_prob) {
        edges.emplace_back(stations[static_cast<std::size_t>(i)],
                           stations[static_cast<std::size_t>(j)]);
      }
    }
  }
  return build_network(stations, edges, {});
}

}  // namespace

TEST_CASE("build_network smallest connected graph") {
  auto net = build_network({"A", "B"}, {{"A", "B"}}, {});
  REQUIRE(net.size() == 2);
  CHECK(net.adjacency(0, 0) == 0.0);
  CHECK(net.adjacency(0, 1) == 1.0);
  CHECK(net.adjacency(1, 0) == 1.0);
  CHECK(net.adjacency(1, 1) == 0.0);
}

TEST_CASE("build_network triangle symmetry") {
  auto net = build_network({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"C", "A"}}, {});
  CHECK(net.adjacency.isApprox(net.adjacency.transpose()));
  for (int i = 0; i < 3; ++i) CHECK(net.adjacency.row(i).sum() == doctest::Approx(2.0));
}

TEST_CASE("build_network error paths") {
  CHECK_THROWS(build_network({"A", "B"}, {{"A", "Z"}}, {}));         // dangling endpoint
  CHECK_THROWS(build_network({"A", "A"}, {}, {}));                   // duplicate id
  CHECK_THROWS(build_network({}, {}, {}));                           // empty station list
  CHECK_THROWS(build_network({"A", "B"}, {}, {{"L", {"A", "Z"}}}));  // line member unknown
}

TEST_CASE("normalized laplacian single edge") {
  auto net = build_network({"A", "B"}, {{"A", "B"}}, {});
  const Eigen::MatrixXd lap = normalized_laplacian(net);
  CHECK(lap(0, 0) == doctest::Approx(1.0));
  CHECK(lap(0, 1) == doctest::Approx(-1.0));
  CHECK(lap(1, 0) == doctest::Approx(-1.0));
  CHECK(lap(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("normalized laplacian K3 eigenvalues against dense oracle") {
  auto net = build_network({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"C", "A"}}, {});
  const Eigen::MatrixXd lap = normalized_laplacian(net);
  for (int i = 0; i < 3; ++i) {
    CHECK(lap(i, i) == doctest::Approx(1.0));
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(lap(i, j) == doctest::Approx(-0.5));
    }
  }
  const auto mine = jacobi_eigendecomposition<double>(lap);
  CHECK(std::abs(mine.eigenvalues(0) - 0.0) < 1e-10);
  CHECK(std::abs(mine.eigenvalues(1) - 1.5) < 1e-10);
  CHECK(std::abs(mine.eigenvalues(2) - 1.5) < 1e-10);

  // independent dense eigensolver oracle
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(lap);
  for (int i = 0; i < 3; ++i) {
    CHECK(mine.eigenvalues(i) == doctest::Approx(oracle.eigenvalues()(i)).epsilon(1e-10));
  }
}

TEST_CASE("normalized laplacian isolated node keeps identity row") {
  auto net = build_network({"A", "B", "C"}, {{"A", "B"}}, {});
  const Eigen::MatrixXd lap = normalized_laplacian(net);
  CHECK(lap(2, 2) == doctest::Approx(1.0));
  CHECK(lap(2, 0) == doctest::Approx(0.0));
  CHECK(lap(2, 1) == doctest::Approx(0.0));
  CHECK(lap(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("spectral embedding path graph matches dense eigensolver oracle") {
  auto net = build_network({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}, {});
  const Eigen::MatrixXd lap = normalized_laplacian(net);
  spectral_embedding(net, 1);

  // residual check on the retained Fiedler pair from the jacobi path
  const auto eig = jacobi_eigendecomposition<double>(lap);
  const double lambda = eig.eigenvalues(1);
  const Eigen::VectorXd v = eig.eigenvectors.col(1);
  CHECK((lap * v - lambda * v).lpNorm<Eigen::Infinity>() < 1e-8);

  // rows are the sign-fixed Fiedler entries, L2-normalised per row
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v(i)) > 1e-12) {
      CHECK(net.station_embedding.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // middle node of the path has a zero Fiedler entry -> zero row at k=1
  CHECK(net.station_embedding.row(1).norm() == doctest::Approx(0.0));
}

TEST_CASE("spectral embedding zero-pads small graphs") {
  auto net = build_network({"A", "B", "C", "D", "E"},
                           {{"A", "B"}, {"B", "C"}, {"C", "D"}, {"D", "E"}}, {});
  spectral_embedding(net);  // k = 8, only 4 non-trivial eigenvectors exist
  REQUIRE(net.station_embedding.cols() == 8);
  for (int i = 0; i < net.size(); ++i) {
    for (int j = 4; j < 8; ++j) CHECK(net.station_embedding(i, j) == 0.0);
    CHECK(net.station_embedding.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("spectral embedding unit rows on random connected graphs") {
  Rng rng(20250810);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 5 + static_cast<int>(uniform_index(rng, 40));
    auto net = random_connected_network(rng, n);
    spectral_embedding(net);
    for (int i = 0; i < n; ++i) {
      CHECK(net.station_embedding.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("laplacian eigenpairs: residual, orthogonality, eigenvalue range") {
  Rng rng(7777);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 5 + static_cast<int>(uniform_index(rng, 30));
    auto net = random_connected_network(rng, n);
    const Eigen::MatrixXd lap = normalized_laplacian(net);
    const auto eig = jacobi_eigendecomposition<double>(lap);
    for (int j = 0; j < n; ++j) {
      CHECK(eig.eigenvalues(j) > -1e-10);
      CHECK(eig.eigenvalues(j) < 2.0 + 1e-10);
      const Eigen::VectorXd r =
          lap * eig.eigenvectors.col(j) - eig.eigenvalues(j) * eig.eigenvectors.col(j);
      CHECK(r.lpNorm<Eigen::Infinity>() < 1e-8);
    }
    const Eigen::MatrixXd gram =
        eig.eigenvectors.transpose() * eig.eigenvectors - Eigen::MatrixXd::Identity(n, n);
    CHECK(gram.lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("embedding is permutation-equivariant up to the sign convention") {
  Rng rng(424242);
  int done = 0;
  int attempts = 0;
  while (done < 5 && attempts < 60) {
    ++attempts;
    const int n = 6 + static_cast<int>(uniform_index(rng, 12));
    auto net = random_connected_network(rng, n, 0.25);
    const auto eig = jacobi_eigendecomposition<double>(normalized_laplacian(net));
    // skip graphs with (near-)degenerate retained spectrum; the retained
    // subspace is not unique there
    bool simple = true;
    const int retained = std::min(n, 1 + kEmbeddingDim + 1);
    for (int j = 1; j < retained && j < n; ++j) {
      if (eig.eigenvalues(j) - eig.eigenvalues(j - 1) < 1e-6) simple = false;
    }
    if (!simple) continue;
    ++done;
    spectral_embedding(net);

    // relabel stations by a rotation of the id list
    std::vector<std::string> permuted = net.stations;
    std::rotate(permuted.begin(), permuted.begin() + 3, permuted.end());
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [a, b] : net.edges) {
      edges.emplace_back(net.stations[static_cast<std::size_t>(a)],
                         net.stations[static_cast<std::size_t>(b)]);
    }
    auto permuted_net = build_network(permuted, edges, {});
    spectral_embedding(permuted_net);

    for (const auto& station : net.stations) {
      const Eigen::RowVectorXd a = net.station_embedding.row(net.index_of(station));
      const Eigen::RowVectorXd b =
          permuted_net.station_embedding.row(permuted_net.index_of(station));
      for (int c = 0; c < kEmbeddingDim; ++c) {
        CHECK(std::abs(std::abs(a(c)) - std::abs(b(c))) < 1e-8);
      }
    }
  }
  CHECK(done == 5);
}

TEST_CASE("spectral embedding is deterministic") {
  Rng rng(11);
  auto net1 = random_connected_network(rng, 20);
  RailNetwork net2 = net1;
  spectral_embedding(net1);
  spectral_embedding(net2);
  CHECK((net1.station_embedding - net2.station_embedding).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("line embedding definitions") {
  auto net = build_network({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}},
                           {{"ONE", {"B"}}, {"TWO", {"A", "C"}}, {"ALL", {"A", "B", "C"}}});
  spectral_embedding(net);

  CHECK((line_embedding(net, "ONE") - net.station_embedding.row(1)).norm() ==
        doctest::Approx(0.0));

  const Eigen::RowVectorXd two = line_embedding(net, "TWO");
  const Eigen::RowVectorXd expected =
      0.5 * (net.station_embedding.row(0) + net.station_embedding.row(2));
  CHECK((two - expected).norm() == doctest::Approx(0.0));

  // direct summation oracle over all stations
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(kEmbeddingDim);
  for (int i = 0; i < 3; ++i) mean += net.station_embedding.row(i);
  mean /= 3.0;
  CHECK((line_embedding(net, "ALL") - mean).norm() < 1e-15);

  CHECK_THROWS(line_embedding(net, "NOPE"));
}

TEST_CASE("line embedding rejects empty lines") {
  auto net = build_network({"A", "B"}, {{"A", "B"}}, {{"EMPTY", {}}});
  spectral_embedding(net);
  CHECK_THROWS(line_embedding(net, "EMPTY"));
}

TEST_CASE("network file round trip") {
  auto net = build_network({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}},
                           {{"L1", {"A", "B"}}, {"L2", {"C"}}});
  std::stringstream ss;
  save_network(net, ss);
  auto back = load_network(ss);
  CHECK(back.stations == net.stations);
  CHECK(back.edges == net.edges);
  CHECK(back.lines == net.lines);
}

TEST_CASE("spectral embedding requires at least two stations") {
  auto net = build_network({"A"}, {}, {});
  CHECK_THROWS(spectral_embedding(net));
}
