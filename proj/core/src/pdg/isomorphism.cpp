#include "nmdec/pdg/isomorphism.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace nmdec::pdg {

IsoTimeout::IsoTimeout(size_t budget)
    : std::runtime_error("isomorphism search exceeded " + std::to_string(budget) + " steps") {}

namespace {

constexpr int kPorts = 6;

struct Adj {
  int other;
  int port;
  bool control;
};

struct Indexed {
  const Pdg* g;
  size_t n;
  std::vector<std::vector<Adj>> out, in;
  std::vector<std::vector<int>> signature;
  std::unordered_set<uint64_t> edges;

  explicit Indexed(const Pdg& pdg) : g(&pdg), n(pdg.nodes.size()), out(n), in(n), signature(n) {
    for (size_t i = 0; i < n; ++i) signature[i].assign(4 * kPorts, 0);
    auto add = [&](const Edge& e, bool control) {
      auto f = static_cast<size_t>(e.from), t = static_cast<size_t>(e.to);
      out[f].push_back({e.to, e.port, control});
      in[t].push_back({e.from, e.port, control});
      int base = control ? 2 * kPorts : 0;
      ++signature[f][static_cast<size_t>(base + e.port)];
      ++signature[t][static_cast<size_t>(base + kPorts + e.port)];
      edges.insert(key(e.from, e.to, e.port, control));
    };
    for (const auto& e : pdg.data) add(e, false);
    for (const auto& e : pdg.control) add(e, true);
  }

  uint64_t key(int from, int to, int port, bool control) const {
    return ((static_cast<uint64_t>(from) * n + static_cast<uint64_t>(to)) * kPorts + static_cast<uint64_t>(port)) * 2 +
           (control ? 1 : 0);
  }
  bool has(int from, int to, int port, bool control) const { return edges.count(key(from, to, port, control)) > 0; }
};

bool same_attributes(const Node& x, const Node& y) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::kConst: return x.value == y.value;
    case NodeKind::kVar: return x.label == y.label;
    case NodeKind::kOp: return true;
  }
  return true;
}

bool compatible(const Node& x, const Node& y, MatchMode mode) {
  if (x.kind != y.kind || x.self_loops != y.self_loops) return false;
  if (x.kind == NodeKind::kOp && x.label != y.label) return false;
  if (mode == MatchMode::kExact && !same_attributes(x, y)) return false;
  return true;
}

struct Step {
  int node;
  int parent = -1;  // earlier node in the order, -1 for a component root
  Adj via{};        // relation from parent to node
  bool via_out = true;
};

class Matcher {
 public:
  Matcher(const Pdg& a, const Pdg& b, const IsoOptions& opts)
      : A(a), B(b), opts_(opts), map_(A.n, -1), inv_(B.n, -1) {
    order();
  }

  std::optional<Isomorphism> run() {
    if (!extend(0)) return std::nullopt;
    return Isomorphism{map_};
  }

 private:
  void order() {
    std::vector<bool> seen(A.n, false);
    std::vector<int> roots(A.n);
    for (size_t i = 0; i < A.n; ++i) roots[i] = static_cast<int>(i);
    for (int r : roots) {
      if (seen[static_cast<size_t>(r)]) continue;
      seen[static_cast<size_t>(r)] = true;
      std::deque<int> q{r};
      steps_.push_back({r});
      while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        auto visit = [&](const Adj& e, bool out) {
          auto w = static_cast<size_t>(e.other);
          if (seen[w]) return;
          seen[w] = true;
          steps_.push_back({e.other, u, e, out});
          q.push_back(e.other);
        };
        for (const auto& e : A.out[static_cast<size_t>(u)]) visit(e, true);
        for (const auto& e : A.in[static_cast<size_t>(u)]) visit(e, false);
      }
    }
  }

  bool feasible(int u, int v) const {
    const auto su = static_cast<size_t>(u), sv = static_cast<size_t>(v);
    const Node& x = A.g->nodes[su];
    const Node& y = B.g->nodes[sv];
    if (!compatible(x, y, opts_.mode) || A.signature[su] != B.signature[sv]) return false;
    for (const auto& e : A.out[su]) {
      int m = map_[static_cast<size_t>(e.other)];
      if (m >= 0 && !B.has(v, m, e.port, e.control)) return false;
    }
    for (const auto& e : A.in[su]) {
      int m = map_[static_cast<size_t>(e.other)];
      if (m >= 0 && !B.has(m, v, e.port, e.control)) return false;
    }
    for (const auto& e : B.out[sv]) {
      int m = inv_[static_cast<size_t>(e.other)];
      if (m >= 0 && !A.has(u, m, e.port, e.control)) return false;
    }
    for (const auto& e : B.in[sv]) {
      int m = inv_[static_cast<size_t>(e.other)];
      if (m >= 0 && !A.has(m, u, e.port, e.control)) return false;
    }
    return true;
  }

  std::vector<int> candidates(const Step& s) const {
    std::vector<int> out;
    if (s.parent < 0) {
      for (size_t v = 0; v < B.n; ++v) {
        if (inv_[v] < 0) out.push_back(static_cast<int>(v));
      }
    } else {
      auto pv = static_cast<size_t>(map_[static_cast<size_t>(s.parent)]);
      const auto& list = s.via_out ? B.out[pv] : B.in[pv];
      for (const auto& e : list) {
        if (e.port == s.via.port && e.control == s.via.control && inv_[static_cast<size_t>(e.other)] < 0) {
          out.push_back(e.other);
        }
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    const Node& x = A.g->nodes[static_cast<size_t>(s.node)];
    std::stable_partition(out.begin(), out.end(),
                          [&](int v) { return same_attributes(x, B.g->nodes[static_cast<size_t>(v)]); });
    return out;
  }

  bool extend(size_t depth) {
    if (depth == steps_.size()) return true;
    const Step& s = steps_[depth];
    for (int v : candidates(s)) {
      if (++steps_taken_ > opts_.budget) throw IsoTimeout(opts_.budget);
      if (!feasible(s.node, v)) continue;
      map_[static_cast<size_t>(s.node)] = v;
      inv_[static_cast<size_t>(v)] = s.node;
      if (extend(depth + 1)) return true;
      map_[static_cast<size_t>(s.node)] = -1;
      inv_[static_cast<size_t>(v)] = -1;
    }
    return false;
  }

  Indexed A, B;
  IsoOptions opts_;
  std::vector<int> map_, inv_;
  std::vector<Step> steps_;
  size_t steps_taken_ = 0;
};

}  // namespace

std::optional<Isomorphism> find_isomorphism(const Pdg& a, const Pdg& b, const IsoOptions& opts) {
  if (a.nodes.size() != b.nodes.size() || a.data.size() != b.data.size() || a.control.size() != b.control.size()) {
    return std::nullopt;
  }
  return Matcher(a, b, opts).run();
}

bool verify_isomorphism(const Pdg& a, const Pdg& b, const Isomorphism& iso, MatchMode mode) {
  const size_t n = a.nodes.size();
  if (b.nodes.size() != n || iso.map.size() != n) return false;
  if (a.data.size() != b.data.size() || a.control.size() != b.control.size()) return false;
  std::vector<bool> used(n, false);
  for (size_t i = 0; i < n; ++i) {
    int m = iso.map[i];
    if (m < 0 || static_cast<size_t>(m) >= n || used[static_cast<size_t>(m)]) return false;
    used[static_cast<size_t>(m)] = true;
    if (!compatible(a.nodes[i], b.nodes[static_cast<size_t>(m)], mode)) return false;
  }
  auto mapped = [&](const std::vector<Edge>& edges) {
    std::vector<Edge> out;
    out.reserve(edges.size());
    for (const auto& e : edges) {
      out.push_back({iso.map[static_cast<size_t>(e.from)], iso.map[static_cast<size_t>(e.to)], e.port});
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  auto sorted = [](std::vector<Edge> e) {
    std::sort(e.begin(), e.end());
    return e;
  };
  return mapped(a.data) == sorted(b.data) && mapped(a.control) == sorted(b.control);
}

}  // namespace nmdec::pdg
