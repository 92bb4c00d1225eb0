#pragma once

// Reference implementations used only for checking: each one follows the
// textbook definition directly and shares no code with the library.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "tlmarl/automaton.hpp"
#include "tlmarl/logic.hpp"

namespace oracle {

using tlmarl::Formula;
using tlmarl::kRhoMax;
using tlmarl::Op;
using tlmarl::Signal;

// Robustness by explicit enumeration of suffix start points:
//   <>f at t  = max_{t' in [t,T]} f(t')
//   []f at t  = min_{t' in [t,T]} f(t')
//   f U g at t = max_{t'} min(g(t'), min_{t'' in [t,t')} f(t''))
//   f T g at t = max_{t'} min(g(t'), max_{t'' in [t,t')} f(t''))
// with empty min = +rho_max and empty max = -rho_max.
inline double suffix_robustness(const Signal& x, const Formula& f, std::size_t t) {
  const std::size_t T = x.length() - 1;
  switch (f.op()) {
    case Op::True:
      return kRhoMax;
    case Op::Pred:
      return x.at(t, f.predicate().slot);
    case Op::Not:
      return -suffix_robustness(x, f.child(0), t);
    case Op::And:
      return std::min(suffix_robustness(x, f.child(0), t), suffix_robustness(x, f.child(1), t));
    case Op::Or:
      return std::max(suffix_robustness(x, f.child(0), t), suffix_robustness(x, f.child(1), t));
    case Op::Imply:
      return std::max(-suffix_robustness(x, f.child(0), t), suffix_robustness(x, f.child(1), t));
    case Op::Next:
      return t < T ? suffix_robustness(x, f.child(0), t + 1) : -kRhoMax;
    case Op::Eventually: {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t s = t; s <= T; ++s) best = std::max(best, suffix_robustness(x, f.child(0), s));
      return best;
    }
    case Op::Always: {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t s = t; s <= T; ++s) worst = std::min(worst, suffix_robustness(x, f.child(0), s));
      return worst;
    }
    case Op::Until:
    case Op::Then: {
      const bool until = f.op() == Op::Until;
      double best = -kRhoMax;
      for (std::size_t s = t; s <= T; ++s) {
        double before = until ? kRhoMax : -kRhoMax;
        for (std::size_t u = t; u < s; ++u) {
          const double v = suffix_robustness(x, f.child(0), u);
          before = until ? std::min(before, v) : std::max(before, v);
        }
        best = std::max(best, std::min(suffix_robustness(x, f.child(1), s), before));
      }
      return best;
    }
  }
  return 0.0;
}

inline Formula random_formula(std::mt19937_64& rng, int depth, const tlmarl::PredicateTable& preds) {
  std::uniform_int_distribution<int> pick(0, 99);
  std::uniform_int_distribution<std::size_t> slot(0, preds.size() - 1);
  if (depth <= 1 || pick(rng) < 20) {
    return pick(rng) < 8 ? Formula::top() : Formula::pred(preds.at(slot(rng)));
  }
  static const Op ops[] = {Op::Not, Op::And, Op::Or, Op::Imply, Op::Next,
                           Op::Eventually, Op::Always, Op::Until, Op::Then};
  const Op op = ops[std::uniform_int_distribution<int>(0, 8)(rng)];
  Formula a = random_formula(rng, depth - 1, preds);
  if (tlmarl::arity(op) == 1) return Formula::unary(op, a);
  return Formula::binary(op, a, random_formula(rng, depth - 1, preds));
}

inline std::size_t depth_of(const Formula& f) {
  const int n = f.op() == Op::True || f.op() == Op::Pred ? 0 : tlmarl::arity(f.op());
  std::size_t d = 0;
  for (int k = 0; k < n; ++k) d = std::max(d, depth_of(f.child(static_cast<std::size_t>(k))));
  return d + 1;
}

// Bellman-Ford relaxation toward the final set along forward edges.
inline std::vector<double> bellman_ford(std::size_t n, const std::vector<tlmarl::FspaEdge>& edges,
                                        const std::vector<bool>& finals) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, inf);
  for (std::size_t q = 0; q < n; ++q) {
    if (finals[q]) d[q] = 0.0;
  }
  for (std::size_t round = 0; round + 1 < n + 1; ++round) {
    bool changed = false;
    for (const auto& e : edges) {
      if (e.from == e.to || d[e.to] == inf) continue;
      if (d[e.to] + e.weight < d[e.from]) {
        d[e.from] = d[e.to] + e.weight;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return d;
}

// Manhattan distance between vertices of a width-wide grid.
inline int manhattan(int u, int v, int width) {
  return std::abs(u % width - v % width) + std::abs(u / width - v / width);
}

// Breadth-first distance over an adjacency list; -1 if unreachable.
inline int bfs(const std::vector<std::vector<int>>& adj, int s, int t) {
  std::vector<int> d(adj.size(), -1);
  std::queue<int> q;
  d[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (d[v] < 0) {
        d[v] = d[u] + 1;
        q.push(v);
      }
    }
  }
  return d[t];
}

}  // namespace oracle
