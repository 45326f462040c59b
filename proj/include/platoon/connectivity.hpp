#pragma once

#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "platoon/graph.hpp"
#include "platoon/rational.hpp"

namespace platoon {

/// Largest n for which the exhaustive searches run.
struct ExhaustiveLimits {
  int robustness = 14;     // 3^n disjoint subset pairs
  int isoperimetric = 22;  // 2^n subsets
};

/// Size of a minimum vertex cut, via vertex-split unit-capacity max-flow.
/// Complete graphs give n - 1; disconnected graphs give 0.
int vertex_connectivity(const Graph& g);

/// Minimum number of edges whose removal disconnects g; 0 if disconnected.
int edge_connectivity(const Graph& g);

/// True iff some vertex of `subset` has at least r neighbors outside it.
/// Throws ValidationError on an empty subset or out-of-range vertex.
bool is_r_reachable(const Graph& g, std::span<const int> subset, int r);

/// Largest r such that g is r-robust, by enumerating every pair of nonempty
/// disjoint subsets. Throws RefusedError when n > limit.
int robustness(const Graph& g, int limit = ExhaustiveLimits{}.robustness);

struct Isoperimetric {
  Rational exact;
  double value = 0.0;
};

/// min |boundary(S)| / |S| over nonempty S with |S| <= n/2.
/// Throws RefusedError when n > limit and ValidationError when n < 2.
Isoperimetric isoperimetric_constant(const Graph& g,
                                     int limit = ExhaustiveLimits{}.isoperimetric);

/// Laplacian eigenvalues in ascending order.
Eigen::VectorXd laplacian_spectrum(const Graph& g);

/// Second-smallest Laplacian eigenvalue (0 for n < 2).
double algebraic_connectivity(const Graph& g);

struct Lambda2Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Expansion-based bracket on lambda_2(P(n,k)), with nbar = floor(n/2):
/// max{2k - n + 2, k(k+1)^2 / (16 nbar^2)} <= lambda_2 <= 2k(k+1) / nbar.
Lambda2Bounds lambda2_bounds(const PlatoonSpec& spec);

/// k(k+1) / (2 floor(n/2)): boundary 1 + 2 + ... + k of a half-platoon prefix.
Rational platoon_isoperimetric(const PlatoonSpec& spec);

int max_tolerable_faults(int k);

enum class Provenance {
  Exhaustive,            // computed by brute force on this graph
  ClosedForm,            // analytic platoon value inside its proven range
  ClosedFormUnverified,  // analytic value outside the range it was checked on
  Skipped,               // too large and no closed form available
};

std::string to_string(Provenance p);

struct ConnectivityReport {
  int n = 0;
  int kappa = 0;
  int edge_conn = 0;
  int min_degree = 0;
  int max_degree = 0;
  std::optional<int> robustness;
  Provenance robustness_source = Provenance::Skipped;
  std::optional<Rational> iso;
  Provenance iso_source = Provenance::Skipped;
  double lambda2 = 0.0;
  std::optional<Lambda2Bounds> lambda2_bounds;
};

/// Computes every measure that fits within `limits`. If `spec` describes g,
/// measures over the limit fall back to the platoon closed forms (labelled);
/// otherwise they are left empty and marked Skipped.
ConnectivityReport analyze(const Graph& g, const ExhaustiveLimits& limits = {},
                           const std::optional<PlatoonSpec>& spec = std::nullopt);

/// Analytic report for P(n,k): kappa = e = robustness = k, the half-prefix
/// isoperimetric value, eigensolver lambda_2 and its bracket.
ConnectivityReport knn_closed_forms(const PlatoonSpec& spec);

}  // namespace platoon
