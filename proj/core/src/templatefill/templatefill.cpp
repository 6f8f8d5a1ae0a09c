#include "nmdec/templatefill/templatefill.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "nmdec/minicc/magic.hpp"

namespace nmdec::templatefill {

using pdg::NodeKind;
using pdg::Pdg;

namespace {

bool fits(int64_t v) {
  return v >= std::numeric_limits<int32_t>::min() && v <= std::numeric_limits<int32_t>::max();
}

Pdg compile_pdg(const lang::Program& p, const minicc::Compiler& compiler, CompileBudget& budget) {
  ++budget.used;
  return pdg::build_pdg(compiler.compile(p), compiler);
}

lang::Program with_value(lang::Program p, int slot, int32_t value) {
  *lang::number_slots(p)[static_cast<size_t>(slot)] = value;
  return p;
}

std::vector<int32_t> probe_values(int32_t v) {
  std::vector<int64_t> raw;
  const int64_t x = v;
  raw.push_back(x + 1);
  if (x == 1) {
    raw.insert(raw.end(), {3, 5});
  } else if (minicc::is_power_of_two(x)) {
    raw.insert(raw.end(), {2 * x, 4 * x});
  } else {
    // 2x keeps the multiply-and-add shape of divisors like 7.
    raw.insert(raw.end(), {x + 2, x - 1, 2 * x});
  }
  std::vector<int32_t> out;
  for (int64_t r : raw) {
    if (fits(r) && r != x && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(static_cast<int32_t>(r));
  }
  return out;
}

std::vector<int> consumers(const Pdg& g, int node) {
  std::vector<int> out;
  for (const auto& e : g.data) {
    if (e.from == node) out.push_back(e.to);
  }
  return out;
}

bool feeds(const Pdg& g, int node, const std::string& label) {
  for (int c : consumers(g, node)) {
    if (g.nodes[static_cast<size_t>(c)].label == label) return true;
  }
  return false;
}

// Shift applied to the high half of a one-operand multiply.
std::optional<int> magic_shift(const Pdg& g, int multiply) {
  int high = -1;
  for (const auto& e : g.data) {
    if (e.from == multiply && e.port == pdg::kPortSecondary) high = e.to;
  }
  if (high < 0) return std::nullopt;
  std::deque<std::pair<int, int>> q{{high, 0}};
  std::set<int> seen{high};
  while (!q.empty()) {
    auto [n, depth] = q.front();
    q.pop_front();
    if (g.nodes[static_cast<size_t>(n)].label == "sarl") {
      for (const auto& e : g.data) {
        const auto& src = g.nodes[static_cast<size_t>(e.from)];
        if (e.to == n && e.port == 0 && src.kind == NodeKind::kConst) return src.value;
      }
      return std::nullopt;
    }
    if (depth == 2) continue;
    for (int c : consumers(g, n)) {
      if (seen.insert(c).second) q.push_back({c, depth + 1});
    }
  }
  return std::nullopt;
}

// Multiplier of the one-operand multiply whose high half reaches `shift`
// within two steps.
std::optional<int32_t> magic_multiplier(const Pdg& g, int shift) {
  std::deque<std::pair<int, int>> q{{shift, 0}};
  std::set<int> seen{shift};
  while (!q.empty()) {
    auto [n, depth] = q.front();
    q.pop_front();
    for (const auto& e : g.data) {
      if (e.to != n) continue;
      const auto& src = g.nodes[static_cast<size_t>(e.from)];
      if (src.label == "imull/1" && e.port == pdg::kPortSecondary) {
        for (const auto& f : g.data) {
          const auto& c = g.nodes[static_cast<size_t>(f.from)];
          if (f.to == e.from && c.kind == NodeKind::kConst) return c.value;
        }
        return std::nullopt;
      }
      if (depth < 2 && seen.insert(e.from).second) q.push_back({e.from, depth + 1});
    }
  }
  return std::nullopt;
}

}  // namespace

Template Template::from_program(lang::Program p) {
  Template t;
  auto values = lang::number_values(p);
  for (size_t i = 0; i < values.size(); ++i) t.slots.push_back({static_cast<int>(i), values[i]});
  t.program = std::move(p);
  return t;
}

std::vector<Mismatch> find_mismatches(const pdg::Isomorphism& iso, const Pdg& input, const Pdg& recompiled) {
  std::vector<Mismatch> out;
  for (size_t r = 0; r < recompiled.nodes.size(); ++r) {
    const auto& nr = recompiled.nodes[r];
    if (nr.kind != NodeKind::kConst) continue;
    int i = iso.map[r];
    const auto& ni = input.nodes[static_cast<size_t>(i)];
    if (ni.value != nr.value) out.push_back({static_cast<int>(r), i, nr.value, ni.value});
  }
  return out;
}

InfluenceMap probe_influence(const Template& t, const minicc::Compiler& compiler, CompileBudget& budget) {
  InfluenceMap out;
  if (budget.exhausted()) return out;
  Pdg base = compile_pdg(t.program, compiler, budget);
  const auto values = lang::number_values(t.program);
  for (const auto& slot : t.slots) {
    int32_t v = values[static_cast<size_t>(slot.id)];
    bool found = false;
    for (int32_t probe : probe_values(v)) {
      if (budget.exhausted()) break;
      Pdg g = compile_pdg(with_value(t.program, slot.id, probe), compiler, budget);
      std::optional<pdg::Isomorphism> iso;
      try {
        iso = pdg::find_isomorphism(base, g);
      } catch (const pdg::IsoTimeout&) {
      }
      if (!iso) continue;
      SlotInfluence inf;
      inf.probe = probe;
      for (size_t n = 0; n < base.nodes.size(); ++n) {
        if (base.nodes[n].kind != NodeKind::kConst) continue;
        int32_t after = g.nodes[static_cast<size_t>(iso->map[n])].value;
        if (after != base.nodes[n].value) inf.changes[static_cast<int>(n)] = {base.nodes[n].value, after};
      }
      found = true;
      bool magic = false;
      for (const auto& [n, c] : inf.changes) magic |= feeds(base, n, "imull/1");
      if (!magic) {
        out.slots[slot.id] = std::move(inf);
        break;
      }
      // A divisor probe can move the multiplier without the shift, so the
      // remaining probes only widen the set of nodes the slot reaches.
      for (int32_t more : probe_values(v)) {
        if (more == probe || budget.exhausted()) continue;
        Pdg h = compile_pdg(with_value(t.program, slot.id, more), compiler, budget);
        std::optional<pdg::Isomorphism> hiso;
        try {
          hiso = pdg::find_isomorphism(base, h);
        } catch (const pdg::IsoTimeout&) {
        }
        if (!hiso) continue;
        for (size_t n = 0; n < base.nodes.size(); ++n) {
          if (base.nodes[n].kind != NodeKind::kConst || inf.changes.count(static_cast<int>(n))) continue;
          if (h.nodes[static_cast<size_t>(hiso->map[n])].value != base.nodes[n].value) inf.coupled.insert(static_cast<int>(n));
        }
      }
      out.slots[slot.id] = std::move(inf);
      break;
    }
    if (!found) out.rigid.insert(slot.id);
  }
  return out;
}

const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::kIdentity: return "identity";
    case Pattern::kLinear: return "linear";
    case Pattern::kPow2Exponent: return "pow2";
    case Pattern::kConditionOffset: return "condition-offset";
    case Pattern::kMagicDivisor: return "magic-divisor";
  }
  return "?";
}

const char* to_string(FillFailure::Reason r) {
  switch (r) {
    case FillFailure::Reason::kNotIsomorphic: return "not-isomorphic";
    case FillFailure::Reason::kUnresolved: return "unresolved";
    case FillFailure::Reason::kTimeout: return "timeout";
  }
  return "?";
}

std::vector<Candidate> invert_candidates(const Mismatch& m, const Pdg& input, int32_t slot_value,
                                         const SlotInfluence* probe) {
  std::vector<Candidate> out;
  auto add = [&](int64_t v, Pattern p) {
    if (!fits(v) || out.size() >= kMaxCandidates) return;
    auto value = static_cast<int32_t>(v);
    for (const auto& c : out) {
      if (c.value == value) return;
    }
    out.push_back({value, p});
  };
  add(m.target, Pattern::kIdentity);
  if (probe) {
    auto it = probe->changes.find(m.recompiled_node);
    if (it != probe->changes.end()) {
      const int64_t dn = int64_t{it->second.after} - it->second.before;
      const int64_t dv = int64_t{probe->probe} - slot_value;
      const int64_t num = (int64_t{m.target} - m.current) * dv;
      if (dn != 0 && num % dn == 0) add(slot_value + num / dn, Pattern::kLinear);
    }
  }
  const int node = m.input_node;
  if ((feeds(input, node, "sall") || feeds(input, node, "sarl")) && m.target >= 0 && m.target <= 30) {
    add(int64_t{1} << m.target, Pattern::kPow2Exponent);
  }
  if (feeds(input, node, "cmpl")) {
    add(int64_t{m.target} + 1, Pattern::kConditionOffset);
    add(int64_t{m.target} - 1, Pattern::kConditionOffset);
  }
  for (int c : consumers(input, node)) {
    const auto& label = input.nodes[static_cast<size_t>(c)].label;
    if (label == "imull/1") {
      if (auto s = magic_shift(input, c)) {
        if (auto d = minicc::divisor_from_magic(m.target, *s)) add(*d, Pattern::kMagicDivisor);
      }
    } else if (label == "sarl") {
      if (auto mult = magic_multiplier(input, c)) {
        if (auto d = minicc::divisor_from_magic(*mult, m.target)) add(*d, Pattern::kMagicDivisor);
      }
    }
  }
  return out;
}

namespace {

// Renames template variables onto the input's through a structural witness.
// Returns false when the witness does not induce a consistent renaming.
bool align_names(lang::Program& p, const Pdg& rec, const Pdg& in, const pdg::Isomorphism& iso,
                 std::vector<std::string>& trace) {
  std::map<std::string, std::string> rename;
  std::set<std::string> targets;
  for (size_t n = 0; n < rec.nodes.size(); ++n) {
    const auto& a = rec.nodes[n];
    const auto& b = in.nodes[static_cast<size_t>(iso.map[n])];
    if (a.kind != NodeKind::kVar || a.label == b.label) continue;
    if (a.label.starts_with("?") || b.label.starts_with("?")) return false;
    rename[a.label] = b.label;
  }
  if (rename.empty()) return true;
  for (const auto& [from, to] : rename) {
    if (!targets.insert(to).second) return false;
    trace.push_back("rename " + from + " -> " + to);
  }
  // Names not involved keep their spelling; avoid capturing a renamed target.
  for (const auto& v : lang::variables(p)) {
    if (!rename.count(v) && targets.count(v)) return false;
  }
  lang::rename_variables(p, [&](const std::string& v) {
    auto it = rename.find(v);
    return it == rename.end() ? v : it->second;
  });
  return true;
}

}  // namespace

FillResult fill(const Template& t, const minicc::AsmProgram& input, const minicc::Compiler& compiler,
                const FillOptions& options) {
  FillResult r;
  CompileBudget budget{options.max_compiles, 0};
  pdg::IsoOptions structural = options.iso;
  structural.mode = pdg::MatchMode::kStructural;
  pdg::IsoOptions exact = options.iso;
  exact.mode = pdg::MatchMode::kExact;

  auto finish_ok = [&](lang::Program p) {
    r.program = std::move(p);
    r.compiles = budget.used;
    return r;
  };
  auto finish_fail = [&](FillFailure::Reason why, std::vector<Mismatch> left) {
    r.failure = {why, std::move(left)};
    r.compiles = budget.used;
    return r;
  };

  try {
    const Pdg in = pdg::build_pdg(input, compiler);
    lang::Program cur = t.program;
    Pdg rec = compile_pdg(cur, compiler, budget);
    auto iso = pdg::find_isomorphism(rec, in, structural);
    if (!iso) return finish_fail(FillFailure::Reason::kNotIsomorphic, {});

    if (!align_names(cur, rec, in, *iso, r.trace)) return finish_fail(FillFailure::Reason::kNotIsomorphic, {});
    if (!r.trace.empty()) {
      rec = compile_pdg(cur, compiler, budget);
      iso = pdg::find_isomorphism(rec, in, structural);
      if (!iso) return finish_fail(FillFailure::Reason::kNotIsomorphic, {});
    }
    if (pdg::find_isomorphism(rec, in, exact)) return finish_ok(cur);

    std::vector<Mismatch> mm = find_mismatches(*iso, in, rec);
    if (mm.empty()) return finish_fail(FillFailure::Reason::kNotIsomorphic, {});

    Template current{cur, t.slots};
    InfluenceMap inf = probe_influence(current, compiler, budget);
    for (int s : inf.rigid) r.trace.push_back("slot " + std::to_string(s) + " is rigid");

    std::vector<std::pair<int, int>> order;  // first influenced node, slot
    for (const auto& [slot, si] : inf.slots) {
      if (!si.changes.empty()) order.push_back({si.changes.begin()->first, slot});
    }
    std::sort(order.begin(), order.end());

    for (auto [first_node, slot] : order) {
      const SlotInfluence& si = inf.slots.at(slot);
      std::vector<Mismatch> mine;
      for (const auto& m : mm) {
        if (si.changes.count(m.recompiled_node) || si.coupled.count(m.recompiled_node)) mine.push_back(m);
      }
      if (mine.empty()) continue;
      const int32_t value = lang::number_values(cur)[static_cast<size_t>(slot)];
      std::vector<Candidate> cands;
      for (const auto& m : mine) {
        for (const auto& c : invert_candidates(m, in, value, &si)) {
          bool dup = c.value == value;
          for (const auto& e : cands) dup |= e.value == c.value;
          if (!dup && cands.size() < kMaxCandidates) cands.push_back(c);
        }
      }
      // First candidate that clears every mismatch wins; otherwise the
      // clean candidate leaving the fewest.
      struct Trial {
        Candidate cand;
        lang::Program program;
        Pdg pdg;
        std::vector<Mismatch> left;
      };
      std::optional<Trial> best;
      for (const auto& c : cands) {
        if (budget.exhausted()) break;
        lang::Program trial = with_value(cur, slot, c.value);
        Pdg tp = compile_pdg(trial, compiler, budget);
        auto ti = pdg::find_isomorphism(tp, in, structural);
        if (!ti) continue;
        auto left = find_mismatches(*ti, in, tp);
        bool clean = left.size() < mm.size() &&
                     std::none_of(left.begin(), left.end(),
                                  [&](const Mismatch& m) { return si.changes.count(m.recompiled_node) + si.coupled.count(m.recompiled_node) > 0; });
        if (!clean || (best && best->left.size() <= left.size())) continue;
        best = Trial{c, std::move(trial), std::move(tp), std::move(left)};
        if (best->left.empty()) break;
      }
      bool fixed = best.has_value();
      if (best) {
        r.trace.push_back("slot " + std::to_string(slot) + ": " + std::to_string(value) + " -> " +
                          std::to_string(best->cand.value) + " (" + to_string(best->cand.pattern) + ")");
        cur = std::move(best->program);
        rec = std::move(best->pdg);
        mm = std::move(best->left);
      }
      if (!fixed) r.trace.push_back("slot " + std::to_string(slot) + ": no candidate matched");
      if (mm.empty() || budget.exhausted()) break;
    }

    if (mm.empty() && pdg::find_isomorphism(rec, in, exact)) return finish_ok(cur);
    return finish_fail(FillFailure::Reason::kUnresolved, mm);
  } catch (const pdg::IsoTimeout&) {
    return finish_fail(FillFailure::Reason::kTimeout, {});
  }
}

}  // namespace nmdec::templatefill
