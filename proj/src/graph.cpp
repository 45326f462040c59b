#include "platoon/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "platoon/errors.hpp"
#include "platoon/json_io.hpp"

namespace platoon {

void PlatoonSpec::validate() const {
  if (n < 1) throw ValidationError("platoon needs n >= 1, got " + std::to_string(n));
  if (k < 1 || k > n - 1) {
    throw ValidationError("platoon needs 1 <= k <= n-1, got n=" + std::to_string(n) +
                          " k=" + std::to_string(k));
  }
}

Graph::Graph(int n, std::vector<Edge> edges) : n_(n) {
  if (n < 0) throw ValidationError("vertex count must be non-negative");
  for (auto& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
      throw ValidationError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                            ") out of range for n=" + std::to_string(n));
    }
    if (e.u == e.v) throw ValidationError("self-loop at vertex " + std::to_string(e.u));
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  auto dup = std::adjacent_find(edges.begin(), edges.end());
  if (dup != edges.end()) {
    throw ValidationError("duplicate edge (" + std::to_string(dup->u) + "," +
                          std::to_string(dup->v) + ")");
  }
  edges_ = std::move(edges);

  const auto un = static_cast<std::size_t>(n);
  neighbors_.assign(un, {});
  dense_.assign(un * un, 0);
  for (const auto& e : edges_) {
    neighbors_[static_cast<std::size_t>(e.u)].push_back(e.v);
    neighbors_[static_cast<std::size_t>(e.v)].push_back(e.u);
    dense_[static_cast<std::size_t>(e.u) * un + static_cast<std::size_t>(e.v)] = 1;
    dense_[static_cast<std::size_t>(e.v) * un + static_cast<std::size_t>(e.u)] = 1;
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

bool Graph::adjacent(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) return false;
  return dense_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                static_cast<std::size_t>(j)] != 0;
}

int Graph::min_degree() const {
  int d = n_ > 0 ? degree(0) : 0;
  for (int i = 1; i < n_; ++i) d = std::min(d, degree(i));
  return d;
}

int Graph::max_degree() const {
  int d = 0;
  for (int i = 0; i < n_; ++i) d = std::max(d, degree(i));
  return d;
}

bool Graph::is_connected() const {
  if (n_ <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(n_), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : neighbors(u)) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n_;
}

std::vector<std::uint64_t> Graph::neighbor_masks() const {
  if (n_ > 64) throw ValidationError("bitmask neighborhoods need n <= 64");
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(n_), 0);
  for (const auto& e : edges_) {
    masks[static_cast<std::size_t>(e.u)] |= std::uint64_t{1} << e.v;
    masks[static_cast<std::size_t>(e.v)] |= std::uint64_t{1} << e.u;
  }
  return masks;
}

Eigen::MatrixXi Graph::adjacency() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n_, n_);
  for (const auto& e : edges_) {
    a(e.u, e.v) = 1;
    a(e.v, e.u) = 1;
  }
  return a;
}

Eigen::MatrixXi Graph::laplacian_int() const {
  Eigen::MatrixXi l = -adjacency();
  for (int i = 0; i < n_; ++i) l(i, i) = degree(i);
  return l;
}

Eigen::MatrixXi Graph::incidence() const {
  Eigen::MatrixXi b = Eigen::MatrixXi::Zero(n_, static_cast<Eigen::Index>(edges_.size()));
  for (std::size_t l = 0; l < edges_.size(); ++l) {
    b(edges_[l].u, static_cast<Eigen::Index>(l)) = 1;
    b(edges_[l].v, static_cast<Eigen::Index>(l)) = -1;
  }
  return b;
}

Graph Graph::with_edge(int i, int j) const {
  auto edges = edges_;
  edges.push_back({i, j});
  return Graph(n_, std::move(edges));
}

Graph build_knn_platoon(const PlatoonSpec& spec) {
  spec.validate();
  std::vector<Edge> edges;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j <= std::min(spec.n - 1, i + spec.k); ++j) edges.push_back({i, j});
  }
  return Graph(spec.n, std::move(edges));
}

Graph path_graph(int n) { return n <= 1 ? Graph(n, {}) : build_knn_platoon({n, 1}); }

Graph cycle_graph(int n) {
  if (n < 3) throw ValidationError("cycle needs n >= 3");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return Graph(n, std::move(edges));
}

Graph complete_graph(int n) { return n <= 1 ? Graph(n, {}) : build_knn_platoon({n, n - 1}); }

Graph star_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({0, i});
  return Graph(n, std::move(edges));
}

Graph matched_cliques(int half) {
  std::vector<Edge> edges;
  for (int side = 0; side < 2; ++side) {
    int base = side * half;
    for (int i = 0; i < half; ++i)
      for (int j = i + 1; j < half; ++j) edges.push_back({base + i, base + j});
  }
  for (int i = 0; i < half; ++i) edges.push_back({i, i + half});
  return Graph(2 * half, std::move(edges));
}

nlohmann::ordered_json graph_to_json(const Graph& g) {
  nlohmann::ordered_json j;
  j["n"] = g.order();
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  return j;
}

Graph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("graph: expected an object", 0);
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw ParseError("/n: expected an integer vertex count", 0);
  if (!j.contains("edges") || !j["edges"].is_array())
    throw ParseError("/edges: expected an array of [i, j] pairs", 0);
  std::vector<Edge> edges;
  const auto& arr = j["edges"];
  for (std::size_t l = 0; l < arr.size(); ++l) {
    const auto& e = arr[l];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ParseError("/edges/" + std::to_string(l) + ": expected a pair of integers", 0);
    edges.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return Graph(j["n"].get<int>(), std::move(edges));
}

std::string to_json_string(const Graph& g) { return graph_to_json(g).dump() + "\n"; }

namespace {

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

Graph graph_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte just past the offending token
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    std::size_t line = line_of_byte(text, byte);
    throw ParseError("malformed graph file at line " + std::to_string(line) + ": " + e.what(),
                     line);
  }
  return graph_from_json(j);
}

void save_graph(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_json_string(g);
}

Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return graph_from_json_string(buf.str());
}

}  // namespace platoon
