#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace raildelay {

inline constexpr int kEmbeddingDim = 8;

/// Undirected station graph plus the spectral coordinates derived from it.
/// Built once, embedded once, then treated as immutable.
struct RailNetwork {
  std::vector<std::string> stations;  // declaration order = matrix order
  std::map<std::string, int> station_index;
  std::vector<std::pair<int, int>> edges;  // canonical (lo, hi) pairs
  Eigen::MatrixXd adjacency;               // n x n, 0/1, zero diagonal
  std::map<std::string, std::vector<std::string>> lines;

  bool embedded = false;
  Eigen::MatrixXd station_embedding;  // n x kEmbeddingDim, unit or zero rows
  std::map<std::string, Eigen::RowVectorXd> line_embeddings;
  // first (by id order) line containing each station; used by the encoder
  std::vector<std::string> station_line;

  int size() const { return static_cast<int>(stations.size()); }
  int index_of(const std::string& station) const;  // throws on unknown id
  Eigen::RowVectorXd embedding_of(int station_idx) const;
};

RailNetwork build_network(const std::vector<std::string>& stations,
                          const std::vector<std::pair<std::string, std::string>>& edges,
                          const std::map<std::string, std::vector<std::string>>& lines);

/// L = I - D^{-1/2} A D^{-1/2}; isolated nodes keep their identity row.
Eigen::MatrixXd normalized_laplacian(const RailNetwork& network);

/// Computes the station embedding from the first k non-trivial Laplacian
/// eigenvectors (trivial = eigenvalue below 1e-9), zero-padding when the graph
/// is too small, fixing each eigenvector's sign so its largest-magnitude entry
/// is positive, then L2-normalising every row. Also fills the per-line
/// embeddings and the station->line association.
void spectral_embedding(RailNetwork& network, int k = kEmbeddingDim);

/// Mean of the member stations' embedding rows (no re-normalisation).
Eigen::RowVectorXd line_embedding(const RailNetwork& network, const std::string& line);

// -- network definition file ------------------------------------------------
// Sections: [stations] one id per line, [edges] "a,b" per line,
// [lines] "line_id: s1,s2,...". '#' starts a comment.
RailNetwork load_network(std::istream& in);
RailNetwork load_network_file(const std::string& path);
void save_network(const RailNetwork& network, std::ostream& out);
void save_network_file(const RailNetwork& network, const std::string& path);

}  // namespace raildelay
