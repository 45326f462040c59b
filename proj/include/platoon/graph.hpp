#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace platoon {

/// Undirected edge stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  auto operator<=>(const Edge&) const = default;
};

/// n vehicles in a line, each linked to every vehicle within index distance k.
struct PlatoonSpec {
  int n = 0;
  int k = 0;

  /// Throws ValidationError unless n >= 1 and 1 <= k <= n - 1.
  void validate() const;
};

/// Undirected simple graph on vertices 0..n-1.
///
/// Edges are kept normalized (u < v) and lexicographically sorted, which fixes
/// the column order of the incidence matrix and the on-disk layout. The object
/// is immutable once built.
class Graph {
 public:
  Graph() = default;

  /// Throws ValidationError on out-of-range endpoints, self-loops, or duplicates.
  Graph(int n, std::vector<Edge> edges);

  int order() const noexcept { return n_; }
  std::size_t size() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Neighbors of `i` in ascending order.
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  bool adjacent(int i, int j) const;

  int min_degree() const;
  int max_degree() const;
  bool is_connected() const;

  /// Neighborhoods as bitmasks; only valid for n <= 64.
  std::vector<std::uint64_t> neighbor_masks() const;

  Eigen::MatrixXi adjacency() const;
  Eigen::MatrixXi laplacian_int() const;
  Eigen::MatrixXd laplacian() const { return laplacian_int().cast<double>(); }

  /// Node-edge incidence; column l is +1 at the head (smaller index) of edge l
  /// and -1 at its tail.
  Eigen::MatrixXi incidence() const;

  /// Copy with one extra edge.
  Graph with_edge(int i, int j) const;

  bool operator==(const Graph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::uint8_t> dense_;
};

Graph build_knn_platoon(const PlatoonSpec& spec);

Graph path_graph(int n);
Graph cycle_graph(int n);
Graph complete_graph(int n);
Graph star_graph(int n);

/// Two copies of K_half joined by the perfect matching i <-> i + half.
Graph matched_cliques(int half);

std::string to_json_string(const Graph& g);
Graph graph_from_json_string(const std::string& text);

void save_graph(const Graph& g, const std::filesystem::path& path);
Graph load_graph(const std::filesystem::path& path);

}  // namespace platoon
