#include "raildelay/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "raildelay/jacobi.hpp"

namespace raildelay {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

int RailNetwork::index_of(const std::string& station) const {
  auto it = station_index.find(station);
  if (it == station_index.end()) {
    throw std::invalid_argument("unknown station id: " + station);
  }
  return it->second;
}

Eigen::RowVectorXd RailNetwork::embedding_of(int station_idx) const {
  return station_embedding.row(station_idx);
}

RailNetwork build_network(const std::vector<std::string>& stations,
                          const std::vector<std::pair<std::string, std::string>>& edges,
                          const std::map<std::string, std::vector<std::string>>& lines) {
  if (stations.empty()) {
    throw std::invalid_argument("build_network: empty station list");
  }
  RailNetwork net;
  net.stations = stations;
  for (int i = 0; i < static_cast<int>(stations.size()); ++i) {
    if (!net.station_index.emplace(stations[i], i).second) {
      throw std::invalid_argument("build_network: duplicate station id: " + stations[i]);
    }
  }
  const int n = net.size();
  net.adjacency = Eigen::MatrixXd::Zero(n, n);
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : edges) {
    auto ia = net.station_index.find(a);
    auto ib = net.station_index.find(b);
    if (ia == net.station_index.end() || ib == net.station_index.end()) {
      throw std::invalid_argument("build_network: dangling edge endpoint: " + a + "," + b);
    }
    if (ia->second == ib->second) {
      throw std::invalid_argument("build_network: self-loop on station: " + a);
    }
    const auto key = std::minmax(ia->second, ib->second);
    if (seen.insert(key).second) {
      net.edges.push_back(key);
      net.adjacency(key.first, key.second) = 1.0;
      net.adjacency(key.second, key.first) = 1.0;
    }
  }
  std::sort(net.edges.begin(), net.edges.end());
  for (const auto& [line_id, members] : lines) {
    for (const auto& s : members) {
      if (!net.station_index.count(s)) {
        throw std::invalid_argument("build_network: line " + line_id +
                                    " references unknown station: " + s);
      }
    }
    net.lines[line_id] = members;
  }
  net.station_embedding = Eigen::MatrixXd::Zero(n, kEmbeddingDim);
  return net;
}

Eigen::MatrixXd normalized_laplacian(const RailNetwork& network) {
  const int n = network.size();
  if (n == 0) throw std::invalid_argument("normalized_laplacian: empty network");
  const Eigen::VectorXd deg = network.adjacency.rowwise().sum();
  Eigen::VectorXd dinv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    dinv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n) -
                        dinv_sqrt.asDiagonal() * network.adjacency * dinv_sqrt.asDiagonal();
  return lap;
}

void spectral_embedding(RailNetwork& network, int k) {
  const int n = network.size();
  if (n < 2) {
    throw std::invalid_argument("spectral_embedding: need at least 2 stations");
  }
  const Eigen::MatrixXd lap = normalized_laplacian(network);
  const auto eig = jacobi_eigendecomposition<double>(lap);

  constexpr double kTrivialThreshold = 1e-9;
  int first_nontrivial = 0;
  while (first_nontrivial < n && eig.eigenvalues(first_nontrivial) < kTrivialThreshold) {
    ++first_nontrivial;
  }

  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(n, k);
  const int available = n - first_nontrivial;
  const int take = std::min(k, available);
  for (int j = 0; j < take; ++j) {
    Eigen::VectorXd vec = eig.eigenvectors.col(first_nontrivial + j);
    // sign convention: largest-magnitude entry (first on ties) positive
    int arg = 0;
    double best = std::abs(vec(0));
    for (int i = 1; i < n; ++i) {
      if (std::abs(vec(i)) > best) {
        best = std::abs(vec(i));
        arg = i;
      }
    }
    if (vec(arg) < 0.0) vec = -vec;
    emb.col(j) = vec;
  }
  for (int i = 0; i < n; ++i) {
    const double norm = emb.row(i).norm();
    // rows at solver noise level are structural zeros, not directions
    if (norm > 1e-9) {
      emb.row(i) /= norm;
    } else {
      emb.row(i).setZero();
    }
  }
  network.station_embedding = emb;
  network.embedded = true;

  network.station_line.assign(static_cast<std::size_t>(n), std::string{});
  for (const auto& [line_id, members] : network.lines) {
    for (const auto& s : members) {
      auto& slot = network.station_line[static_cast<std::size_t>(network.index_of(s))];
      if (slot.empty()) slot = line_id;  // std::map iterates ids in order
    }
  }
  network.line_embeddings.clear();
  for (const auto& [line_id, members] : network.lines) {
    if (members.empty()) continue;
    network.line_embeddings[line_id] = line_embedding(network, line_id);
  }
}

Eigen::RowVectorXd line_embedding(const RailNetwork& network, const std::string& line) {
  if (!network.embedded) {
    throw std::logic_error("line_embedding: spectral_embedding not computed");
  }
  auto it = network.lines.find(line);
  if (it == network.lines.end()) {
    throw std::invalid_argument("line_embedding: unknown line: " + line);
  }
  if (it->second.empty()) {
    throw std::invalid_argument("line_embedding: line has no stations: " + line);
  }
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(network.station_embedding.cols());
  for (const auto& s : it->second) {
    mean += network.station_embedding.row(network.index_of(s));
  }
  mean /= static_cast<double>(it->second.size());
  return mean;
}

RailNetwork load_network(std::istream& in) {
  std::vector<std::string> stations;
  std::vector<std::pair<std::string, std::string>> edges;
  std::map<std::string, std::vector<std::string>> lines;

  enum class Section { None, Stations, Edges, Lines } section = Section::None;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line == "[stations]") {
      section = Section::Stations;
    } else if (line == "[edges]") {
      section = Section::Edges;
    } else if (line == "[lines]") {
      section = Section::Lines;
    } else if (line.front() == '[') {
      throw std::runtime_error("network file: unknown section at line " + std::to_string(lineno));
    } else {
      switch (section) {
        case Section::Stations:
          stations.push_back(line);
          break;
        case Section::Edges: {
          const auto parts = split_csv(line);
          if (parts.size() != 2) {
            throw std::runtime_error("network file: bad edge at line " + std::to_string(lineno));
          }
          edges.emplace_back(parts[0], parts[1]);
          break;
        }
        case Section::Lines: {
          const auto colon = line.find(':');
          if (colon == std::string::npos) {
            throw std::runtime_error("network file: bad line entry at line " +
                                     std::to_string(lineno));
          }
          lines[trim(line.substr(0, colon))] = split_csv(line.substr(colon + 1));
          break;
        }
        case Section::None:
          throw std::runtime_error("network file: content before any section at line " +
                                   std::to_string(lineno));
      }
    }
  }
  return build_network(stations, edges, lines);
}

RailNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file: " + path);
  return load_network(in);
}

void save_network(const RailNetwork& network, std::ostream& out) {
  out << "[stations]\n";
  for (const auto& s : network.stations) out << s << "\n";
  out << "[edges]\n";
  for (const auto& [a, b] : network.edges) {
    out << network.stations[static_cast<std::size_t>(a)] << ","
        << network.stations[static_cast<std::size_t>(b)] << "\n";
  }
  out << "[lines]\n";
  for (const auto& [line_id, members] : network.lines) {
    out << line_id << ": ";
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i) out << ",";
      out << members[i];
    }
    out << "\n";
  }
}

void save_network_file(const RailNetwork& network, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write network file: " + path);
  save_network(network, out);
}

}  // namespace raildelay
