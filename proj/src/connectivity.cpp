#include "platoon/connectivity.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include <Eigen/Eigenvalues>

#include "platoon/errors.hpp"
#include "platoon/max_flow.hpp"

namespace platoon {

namespace {

// Max number of internally vertex-disjoint s-t paths (s, t non-adjacent).
// Vertex v splits into v_in = 2v and v_out = 2v + 1.
int local_vertex_connectivity(const Graph& g, int s, int t, int limit) {
  FlowNetwork net(2 * g.order());
  for (int v = 0; v < g.order(); ++v) net.add_arc(2 * v, 2 * v + 1, 1);
  for (const auto& e : g.edges()) {
    net.add_arc(2 * e.u + 1, 2 * e.v, 1);
    net.add_arc(2 * e.v + 1, 2 * e.u, 1);
  }
  return net.max_flow(2 * s + 1, 2 * t, limit);
}

}  // namespace

int vertex_connectivity(const Graph& g) {
  const int n = g.order();
  if (n <= 1 || !g.is_connected()) return 0;
  int best = n - 1;
  // Some vertex among the first best+1 lies outside any minimum cut, so it
  // suffices to try those as sources against every non-neighbor.
  for (int s = 0; s < n && s <= best; ++s) {
    for (int t = 0; t < n; ++t) {
      if (t == s || g.adjacent(s, t)) continue;
      best = std::min(best, local_vertex_connectivity(g, s, t, best));
    }
  }
  return best;
}

int edge_connectivity(const Graph& g) {
  const int n = g.order();
  if (n <= 1 || !g.is_connected()) return 0;
  FlowNetwork net(n);
  for (const auto& e : g.edges()) {
    net.add_arc(e.u, e.v, 1);
    net.add_arc(e.v, e.u, 1);
  }
  int best = g.min_degree();
  for (int t = 1; t < n; ++t) best = std::min(best, net.max_flow(0, t, best));
  return best;
}

bool is_r_reachable(const Graph& g, std::span<const int> subset, int r) {
  if (subset.empty()) throw ValidationError("r-reachability needs a nonempty subset");
  std::vector<char> inside(static_cast<std::size_t>(g.order()), 0);
  for (int v : subset) {
    if (v < 0 || v >= g.order()) throw ValidationError("subset vertex out of range");
    inside[static_cast<std::size_t>(v)] = 1;
  }
  for (int v : subset) {
    int outside = 0;
    for (int w : g.neighbors(v)) outside += inside[static_cast<std::size_t>(w)] ? 0 : 1;
    if (outside >= r) return true;
  }
  return false;
}

int robustness(const Graph& g, int limit) {
  const int n = g.order();
  if (n > limit) {
    throw RefusedError("exhaustive robustness search refused: n=" + std::to_string(n) +
                       " exceeds limit " + std::to_string(limit));
  }
  if (n < 2) return 0;

  const auto masks = g.neighbor_masks();
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  // reach[S] = max over v in S of |N(v) \ S|, the largest r making S r-reachable
  std::vector<std::uint8_t> reach(std::size_t{1} << n, 0);
  for (std::uint64_t s = 1; s <= full; ++s) {
    int best = 0;
    for (std::uint64_t rest = s; rest != 0; rest &= rest - 1) {
      int v = std::countr_zero(rest);
      best = std::max(best, std::popcount(masks[static_cast<std::size_t>(v)] & ~s));
    }
    reach[s] = static_cast<std::uint8_t>(best);
  }

  int r = n;
  for (std::uint64_t s1 = 1; s1 <= full; ++s1) {
    const int r1 = reach[s1];
    if (r1 >= r) continue;  // this S1 cannot lower the minimum
    const std::uint64_t rest = full & ~s1;
    for (std::uint64_t s2 = rest; s2 != 0; s2 = (s2 - 1) & rest) {
      r = std::min(r, std::max(r1, static_cast<int>(reach[s2])));
      if (r <= r1) break;
    }
  }
  return r;
}

Isoperimetric isoperimetric_constant(const Graph& g, int limit) {
  const int n = g.order();
  if (n > limit) {
    throw RefusedError("exhaustive isoperimetric search refused: n=" + std::to_string(n) +
                       " exceeds limit " + std::to_string(limit));
  }
  if (n < 2) throw ValidationError("isoperimetric constant needs n >= 2");

  const auto masks = g.neighbor_masks();
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  const int half = n / 2;
  std::int64_t best_num = 0;
  std::int64_t best_den = 0;
  for (std::uint64_t s = 1; s <= full; ++s) {
    const int size = std::popcount(s);
    if (size > half) continue;
    std::int64_t boundary = 0;
    for (std::uint64_t rest = s; rest != 0; rest &= rest - 1) {
      int v = std::countr_zero(rest);
      boundary += std::popcount(masks[static_cast<std::size_t>(v)] & ~s);
    }
    if (best_den == 0 || boundary * best_den < best_num * size) {
      best_num = boundary;
      best_den = size;
    }
  }
  Rational exact(best_num, best_den);
  return {exact, exact.to_double()};
}

Eigen::VectorXd laplacian_spectrum(const Graph& g) {
  if (g.order() == 0) return Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g.laplacian(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();  // ascending
}

double algebraic_connectivity(const Graph& g) {
  if (g.order() < 2) return 0.0;
  return laplacian_spectrum(g)(1);
}

Lambda2Bounds lambda2_bounds(const PlatoonSpec& spec) {
  spec.validate();
  const double n = spec.n;
  const double k = spec.k;
  const double nbar = std::max(1, spec.n / 2);
  Lambda2Bounds b;
  b.lower = std::max(2.0 * k - n + 2.0, k * (k + 1.0) * (k + 1.0) / (16.0 * nbar * nbar));
  b.upper = 2.0 * k * (k + 1.0) / nbar;
  return b;
}

Rational platoon_isoperimetric(const PlatoonSpec& spec) {
  spec.validate();
  if (spec.n < 2) throw ValidationError("isoperimetric constant needs n >= 2");
  return Rational(std::int64_t{spec.k} * (spec.k + 1), 2 * std::int64_t{spec.n / 2});
}

int max_tolerable_faults(int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  return (k - 1) / 2;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Exhaustive:
      return "exhaustive";
    case Provenance::ClosedForm:
      return "closed-form, not verified exhaustively";
    case Provenance::ClosedFormUnverified:
      return "closed-form outside its verified range (k > floor(n/2)), unverified";
    case Provenance::Skipped:
      return "skipped: n too large";
  }
  return "unknown";
}

ConnectivityReport knn_closed_forms(const PlatoonSpec& spec) {
  spec.validate();
  const Graph g = build_knn_platoon(spec);
  const bool in_range = spec.k <= spec.n / 2;
  ConnectivityReport r;
  r.n = spec.n;
  r.kappa = spec.k;
  r.edge_conn = spec.k;
  r.min_degree = g.min_degree();
  r.max_degree = g.max_degree();
  r.robustness = spec.k;
  r.robustness_source = in_range ? Provenance::ClosedForm : Provenance::ClosedFormUnverified;
  if (spec.n >= 2) {
    r.iso = platoon_isoperimetric(spec);
    r.iso_source = in_range ? Provenance::ClosedForm : Provenance::ClosedFormUnverified;
  }
  r.lambda2 = algebraic_connectivity(g);
  r.lambda2_bounds = lambda2_bounds(spec);
  return r;
}

ConnectivityReport analyze(const Graph& g, const ExhaustiveLimits& limits,
                           const std::optional<PlatoonSpec>& spec) {
  std::optional<ConnectivityReport> closed;
  if (spec) closed = knn_closed_forms(*spec);

  ConnectivityReport r;
  r.n = g.order();
  r.kappa = vertex_connectivity(g);
  r.edge_conn = edge_connectivity(g);
  r.min_degree = g.min_degree();
  r.max_degree = g.max_degree();
  r.lambda2 = algebraic_connectivity(g);
  if (closed) r.lambda2_bounds = closed->lambda2_bounds;

  if (g.order() <= limits.robustness) {
    r.robustness = robustness(g, limits.robustness);
    r.robustness_source = Provenance::Exhaustive;
  } else if (closed) {
    r.robustness = closed->robustness;
    r.robustness_source = closed->robustness_source;
  }

  if (g.order() >= 2 && g.order() <= limits.isoperimetric) {
    r.iso = isoperimetric_constant(g, limits.isoperimetric).exact;
    r.iso_source = Provenance::Exhaustive;
  } else if (closed && closed->iso) {
    r.iso = closed->iso;
    r.iso_source = closed->iso_source;
  }
  return r;
}

}  // namespace platoon
