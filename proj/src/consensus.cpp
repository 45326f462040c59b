#include "platoon/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "platoon/errors.hpp"

namespace platoon {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double AdversaryModel::broadcast(int step) const {
  return std::visit(
      overloaded{
          [](const strategy::Constant& s) { return s.value; },
          [step](const strategy::Ramp& s) { return s.offset + s.slope * step; },
          [step](const strategy::Sinusoid& s) {
            return s.amplitude * std::sin(s.omega * step + s.phase);
          },
          [step](const strategy::SeededRandom& s) {
            std::seed_seq seq{static_cast<std::uint32_t>(s.seed),
                              static_cast<std::uint32_t>(s.seed >> 32),
                              static_cast<std::uint32_t>(step)};
            std::mt19937_64 rng(seq);
            return std::uniform_real_distribution<double>(s.low, s.high)(rng);
          },
      },
      strategy);
}

std::vector<NeighborValue> wmsr_retained(double own, std::span<const NeighborValue> neighbors,
                                         int f) {
  if (f < 0) throw ValidationError("W-MSR parameter f must be non-negative");
  std::vector<NeighborValue> above;
  std::vector<NeighborValue> below;
  std::vector<NeighborValue> kept;
  for (const auto& nv : neighbors) {
    if (nv.value > own) {
      above.push_back(nv);
    } else if (nv.value < own) {
      below.push_back(nv);
    } else {
      kept.push_back(nv);
    }
  }
  // Most extreme first; among equal values the higher index goes first.
  std::sort(above.begin(), above.end(), [](const auto& a, const auto& b) {
    return a.value != b.value ? a.value > b.value : a.id > b.id;
  });
  std::sort(below.begin(), below.end(), [](const auto& a, const auto& b) {
    return a.value != b.value ? a.value < b.value : a.id > b.id;
  });
  const auto uf = static_cast<std::size_t>(f);
  if (above.size() > uf) kept.insert(kept.end(), above.begin() + static_cast<std::ptrdiff_t>(uf), above.end());
  if (below.size() > uf) kept.insert(kept.end(), below.begin() + static_cast<std::ptrdiff_t>(uf), below.end());
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return kept;
}

double wmsr_update(double own, std::span<const NeighborValue> neighbors, int f) {
  const auto kept = wmsr_retained(own, neighbors, f);
  // own + mean offset keeps an all-equal neighborhood exactly fixed
  double offset = 0.0;
  for (const auto& nv : kept) offset += nv.value - own;
  return own + offset / static_cast<double>(kept.size() + 1);
}

bool is_f_local(const Graph& g, std::span<const int> set, int f) {
  std::vector<char> inside(static_cast<std::size_t>(g.order()), 0);
  for (int v : set) {
    if (v < 0 || v >= g.order()) throw ValidationError("vertex out of range");
    inside[static_cast<std::size_t>(v)] = 1;
  }
  for (int i = 0; i < g.order(); ++i) {
    if (inside[static_cast<std::size_t>(i)]) continue;
    int count = 0;
    for (int j : g.neighbors(i)) count += inside[static_cast<std::size_t>(j)];
    if (count > f) return false;
  }
  return true;
}

std::pair<double, double> ConsensusTrace::normal_hull(int step) const {
  const auto& x = values.at(static_cast<std::size_t>(step));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i : normal) {
    lo = std::min(lo, x(i));
    hi = std::max(hi, x(i));
  }
  return {lo, hi};
}

double ConsensusTrace::spread(int step) const {
  auto [lo, hi] = normal_hull(step);
  return normal.empty() ? 0.0 : hi - lo;
}

ConsensusTrace run_wmsr(const Graph& g, const Eigen::VectorXd& x0,
                        std::span<const AdversaryModel> adversaries, int f, int steps,
                        double tol) {
  const int n = g.order();
  if (x0.size() != n) throw ValidationError("initial state has the wrong dimension");
  if (steps < 0) throw ValidationError("step count must be non-negative");

  ConsensusTrace trace;
  std::vector<const AdversaryModel*> by_vehicle(static_cast<std::size_t>(n), nullptr);
  for (const auto& a : adversaries) {
    if (a.vehicle < 0 || a.vehicle >= n) throw ValidationError("adversary vehicle out of range");
    if (by_vehicle[static_cast<std::size_t>(a.vehicle)])
      throw ValidationError("vehicle " + std::to_string(a.vehicle) + " has two adversary models");
    by_vehicle[static_cast<std::size_t>(a.vehicle)] = &a;
    trace.adversaries.push_back(a.vehicle);
  }
  std::sort(trace.adversaries.begin(), trace.adversaries.end());
  for (int i = 0; i < n; ++i)
    if (!by_vehicle[static_cast<std::size_t>(i)]) trace.normal.push_back(i);

  trace.adversaries_f_local = is_f_local(g, trace.adversaries, f);
  if (!trace.adversaries_f_local) {
    trace.warnings.push_back("adversary set is not " + std::to_string(f) +
                             "-local; resilient consensus is not guaranteed");
  }

  Eigen::VectorXd x = x0;
  for (const auto& a : adversaries) x(a.vehicle) = a.broadcast(0);
  trace.values.reserve(static_cast<std::size_t>(steps) + 1);
  trace.values.push_back(x);
  if (trace.spread(0) < tol) trace.converged_at = 0;

  std::vector<NeighborValue> heard;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd& prev = trace.values.back();
    Eigen::VectorXd next(n);
    for (int i = 0; i < n; ++i) {
      if (const auto* a = by_vehicle[static_cast<std::size_t>(i)]) {
        next(i) = a->broadcast(k + 1);
        continue;
      }
      heard.clear();
      for (int j : g.neighbors(i)) heard.push_back({j, prev(j)});
      next(i) = wmsr_update(prev(i), heard, f);
    }

    auto [lo, hi] = trace.normal_hull(k);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(lo), std::abs(hi));
    for (int i : trace.normal) {
      if (next(i) < lo - slack || next(i) > hi + slack) {
        ++trace.safety_violations;
        break;
      }
    }
    trace.values.push_back(std::move(next));
    if (!trace.converged_at && trace.spread(k + 1) < tol) trace.converged_at = k + 1;
  }
  return trace;
}

}  // namespace platoon
