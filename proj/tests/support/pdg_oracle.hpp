#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nmdec/pdg/isomorphism.hpp"
#include "nmdec/pdg/pdg.hpp"

namespace nmdec::pdg::testing_support {

// Random graphs over a handful of node classes.
inline Pdg random_graph(std::mt19937& rng, int n) {
  static const char* kOps[] = {"addl/2", "subl/2", "store"};
  Pdg g;
  for (int i = 0; i < n; ++i) {
    Node node;
    int kind = static_cast<int>(rng() % 3);
    node.kind = static_cast<NodeKind>(kind);
    if (node.kind == NodeKind::kOp) node.label = kOps[rng() % 3];
    if (node.kind == NodeKind::kVar) node.label = "v" + std::to_string(rng() % 3);
    node.value = static_cast<int32_t>(rng() % 3);
    if (rng() % 5 == 0) node.self_loops = 1u << (rng() % 2);
    g.nodes.push_back(node);
  }
  std::set<Edge> data, control;
  int edges = static_cast<int>(rng() % static_cast<unsigned>(2 * n + 1));
  for (int e = 0; e < edges && n > 1; ++e) {
    int f = static_cast<int>(rng() % static_cast<unsigned>(n));
    int t = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (f == t) continue;
    if (rng() % 4 == 0) {
      control.insert({f, t, 0});
    } else {
      data.insert({f, t, static_cast<int>(rng() % 2)});
    }
  }
  g.data.assign(data.begin(), data.end());
  g.control.assign(control.begin(), control.end());
  return g;
}

inline Pdg permuted(const Pdg& g, const std::vector<int>& perm) {
  Pdg out;
  out.nodes.resize(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) out.nodes[static_cast<size_t>(perm[i])] = g.nodes[i];
  auto map = [&](const std::vector<Edge>& es) {
    std::vector<Edge> r;
    for (const auto& e : es) r.push_back({perm[static_cast<size_t>(e.from)], perm[static_cast<size_t>(e.to)], e.port});
    std::sort(r.begin(), r.end());
    return r;
  };
  out.data = map(g.data);
  out.control = map(g.control);
  return out;
}

// Enumerates every bijection that keeps node attributes compatible and
// checks edge sets directly.
inline bool brute_force_isomorphic(const Pdg& a, const Pdg& b, MatchMode mode) {
  const size_t n = a.nodes.size();
  if (b.nodes.size() != n) return false;
  auto ok = [&](const Node& x, const Node& y) {
    if (x.kind != y.kind || x.self_loops != y.self_loops) return false;
    if (x.kind == NodeKind::kOp) return x.label == y.label;
    if (mode == MatchMode::kStructural) return true;
    return x.kind == NodeKind::kVar ? x.label == y.label : x.value == y.value;
  };
  std::set<Edge> bd(b.data.begin(), b.data.end()), bc(b.control.begin(), b.control.end());
  std::vector<int> map(n, -1);
  std::vector<bool> used(n, false);
  std::function<bool(size_t)> rec = [&](size_t i) {
    if (i == n) {
      std::set<Edge> ad, ac;
      for (const auto& e : a.data) ad.insert({map[static_cast<size_t>(e.from)], map[static_cast<size_t>(e.to)], e.port});
      for (const auto& e : a.control) ac.insert({map[static_cast<size_t>(e.from)], map[static_cast<size_t>(e.to)], e.port});
      return ad == bd && ac == bc;
    }
    for (size_t j = 0; j < n; ++j) {
      if (used[j] || !ok(a.nodes[i], b.nodes[j])) continue;
      used[j] = true;
      map[i] = static_cast<int>(j);
      if (rec(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return rec(0);
}

// Pairs of up to 10 nodes: a relabelled copy, a relabelled copy with one
// edge port flipped, or an unrelated graph, by trial index.
inline std::pair<Pdg, Pdg> random_trial(std::mt19937& rng, int t) {
  int n = 1 + static_cast<int>(rng() % 10);
  Pdg a = random_graph(rng, n);
  Pdg b;
  switch (t % 3) {
    case 0: {  // relabelled copy
      std::vector<int> perm(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      b = permuted(a, perm);
      break;
    }
    case 1: {  // relabelled copy with one edge moved
      std::vector<int> perm(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      b = permuted(a, perm);
      if (!b.data.empty() && n > 1) {
        size_t pick = rng() % b.data.size();
        Edge e = b.data[pick];
        e.port ^= 1;
        b.data.erase(b.data.begin() + static_cast<std::ptrdiff_t>(pick));
        if (std::find(b.data.begin(), b.data.end(), e) == b.data.end()) b.data.push_back(e);
        std::sort(b.data.begin(), b.data.end());
      }
      break;
    }
    default: b = random_graph(rng, n);
  }
  return {a, b};
}

}  // namespace nmdec::pdg::testing_support
