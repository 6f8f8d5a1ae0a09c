#include "nmdec/pdg/pdg.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "nmdec/minicc/semantics.hpp"

namespace nmdec::pdg {

using minicc::InstructionSemantics;
using minicc::Location;
using minicc::Opcode;

namespace {

class Bits {
 public:
  explicit Bits(size_t n = 0, bool full = false) : w_((n + 63) / 64, full ? ~uint64_t{0} : 0), n_(n) {
    if (full && n % 64) w_.back() = (uint64_t{1} << (n % 64)) - 1;
  }
  void set(size_t i) { w_[i / 64] |= uint64_t{1} << (i % 64); }
  void reset(size_t i) { w_[i / 64] &= ~(uint64_t{1} << (i % 64)); }
  bool test(size_t i) const { return (w_[i / 64] >> (i % 64)) & 1; }
  void operator|=(const Bits& o) {
    for (size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
  }
  void operator&=(const Bits& o) {
    for (size_t k = 0; k < w_.size(); ++k) w_[k] &= o.w_[k];
  }
  bool operator==(const Bits& o) const { return w_ == o.w_; }
  size_t count() const {
    size_t c = 0;
    for (uint64_t x : w_) c += static_cast<size_t>(__builtin_popcountll(x));
    return c;
  }
  size_t size() const { return n_; }

 private:
  std::vector<uint64_t> w_;
  size_t n_;
};

class Builder {
 public:
  Builder(const minicc::AsmProgram& a, const minicc::Compiler* cc) : a_(a) {
    const size_t n = a.code.size();
    sem_.reserve(n);
    for (const auto& ins : a.code) sem_.push_back(cc ? cc->instruction_semantics(ins) : minicc::semantics(ins));
    for (size_t i = 0; i < n; ++i) {
      if (a.code[i].op != Opcode::kLabel) continue;
      const auto& name = std::get<minicc::Label>(a.code[i].operands[0]).name;
      if (!labels_.emplace(name, i).second) throw minicc::MalformedProgram("duplicate label " + name);
    }
    succ_.resize(n + 1);
    for (size_t i = 0; i < n; ++i) {
      const auto& s = sem_[i];
      if (s.is_branch) {
        auto it = labels_.find(s.target);
        if (it == labels_.end()) throw minicc::MalformedProgram("jump to undefined label " + s.target);
        succ_[i].push_back(it->second);
        if (s.is_conditional) succ_[i].push_back(i + 1);
      } else {
        succ_[i].push_back(i + 1);
      }
    }
  }

  Pdg build() {
    reaching_definitions();
    create_nodes();
    data_edges();
    exit_edges();
    control_edges();
    finish();
    return std::move(g_);
  }

 private:
  struct Def {
    int instr;  // -1: value on entry
    Location loc;
  };

  // --- reaching definitions ---------------------------------------------

  int def_id(int instr, const Location& loc) {
    auto key = std::make_pair(instr, loc);
    auto it = def_ids_.find(key);
    if (it != def_ids_.end()) return it->second;
    int id = static_cast<int>(defs_.size());
    defs_.push_back({instr, loc});
    def_ids_.emplace(key, id);
    by_loc_[loc].push_back(id);
    return id;
  }

  std::vector<Location> written(size_t i) const {
    std::vector<Location> out = sem_[i].defs;
    if (sem_[i].secondary_def) out.push_back(*sem_[i].secondary_def);
    return out;
  }

  void reaching_definitions() {
    const size_t n = a_.code.size();
    std::set<Location> locs;
    for (size_t i = 0; i < n; ++i) {
      for (const auto& u : sem_[i].uses) {
        if (u.loc) locs.insert(*u.loc);
      }
      for (const auto& d : written(i)) locs.insert(d);
    }
    for (const auto& l : locs) def_id(-1, l);
    for (size_t i = 0; i < n; ++i) {
      for (const auto& d : written(i)) def_id(static_cast<int>(i), d);
    }
    const size_t nd = defs_.size();
    std::vector<Bits> gen(n, Bits(nd)), kill(n, Bits(nd));
    for (size_t i = 0; i < n; ++i) {
      for (const auto& d : written(i)) {
        for (int id : by_loc_[d]) kill[i].set(static_cast<size_t>(id));
        gen[i].set(static_cast<size_t>(def_ids_.at({static_cast<int>(i), d})));
      }
    }
    in_.assign(n + 1, Bits(nd));
    std::vector<Bits> out(n + 1, Bits(nd));
    Bits entry(nd);
    for (const auto& l : locs) entry.set(static_cast<size_t>(def_ids_.at({-1, l})));
    std::vector<std::vector<size_t>> pred(n + 1);
    for (size_t i = 0; i < n; ++i) {
      for (size_t s : succ_[i]) pred[s].push_back(i);
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i <= n; ++i) {
        Bits in(nd);
        if (i == 0) in |= entry;
        for (size_t p : pred[i]) in |= out[p];
        Bits o = in;
        if (i < n) {
          // out = gen | (in & ~kill)
          Bits keep(nd);
          for (size_t k = 0; k < nd; ++k) {
            if (in.test(k) && !kill[i].test(k)) keep.set(k);
          }
          o = keep;
          o |= gen[i];
        }
        if (!(in == in_[i]) || !(o == out[i])) {
          in_[i] = std::move(in);
          out[i] = std::move(o);
          changed = true;
        }
      }
    }
  }

  std::vector<int> reaching(size_t at, const Location& loc) const {
    std::vector<int> out;
    auto it = by_loc_.find(loc);
    if (it == by_loc_.end()) return out;
    for (int id : it->second) {
      if (in_[at].test(static_cast<size_t>(id))) out.push_back(id);
    }
    return out;
  }

  // --- nodes --------------------------------------------------------------

  int add_node(Node n) {
    g_.nodes.push_back(std::move(n));
    return static_cast<int>(g_.nodes.size()) - 1;
  }

  int var_node(const std::string& name) {
    auto it = var_nodes_.find(name);
    if (it != var_nodes_.end()) return it->second;
    Node n;
    n.kind = NodeKind::kVar;
    n.label = name;
    int id = add_node(n);
    var_nodes_.emplace(name, id);
    return id;
  }

  int const_node(int32_t value, int instr) {
    Node n;
    n.kind = NodeKind::kConst;
    n.label = "const";
    n.value = value;
    n.instruction = instr;
    n.origin = a_.code[static_cast<size_t>(instr)].origin;
    return add_node(n);
  }

  bool has_node(size_t i) const {
    auto op = a_.code[i].op;
    return op != Opcode::kLabel && op != Opcode::kDirective && !sem_[i].is_copy;
  }

  void create_nodes() {
    const size_t n = a_.code.size();
    op_node_.assign(n, -1);
    secondary_node_.assign(n, -1);
    copy_const_.assign(n, -1);
    for (size_t i = 0; i < n; ++i) {
      const auto& s = sem_[i];
      // Variables appear in first-mention order.
      for (const auto& u : s.uses) {
        if (u.loc && u.loc->kind == Location::Kind::kMem && !minicc::is_temp(u.loc->name)) var_node(u.loc->name);
      }
      for (const auto& d : s.defs) {
        if (d.kind == Location::Kind::kMem && !minicc::is_temp(d.name)) var_node(d.name);
      }
      if (s.is_copy) {
        if (s.uses[0].imm) copy_const_[i] = const_node(*s.uses[0].imm, static_cast<int>(i));
        continue;
      }
      if (!has_node(i)) continue;
      Node node;
      node.kind = NodeKind::kOp;
      node.label = s.op_class;
      node.instruction = static_cast<int>(i);
      node.origin = a_.code[i].origin;
      op_node_[i] = add_node(node);
      if (s.secondary_def) {
        node.label = s.op_class + "#2";
        secondary_node_[i] = add_node(node);
        add_edge(op_node_[i], secondary_node_[i], kPortSecondary);
      }
    }
  }

  // --- value flow -----------------------------------------------------------

  void sources(size_t at, const Location& loc, std::set<std::pair<size_t, Location>>& seen, std::set<int>& out) {
    if (!seen.insert({at, loc}).second) return;
    for (int id : reaching(at, loc)) {
      const Def& d = defs_[static_cast<size_t>(id)];
      if (d.instr < 0) {
        if (d.loc.kind == Location::Kind::kMem && !minicc::is_temp(d.loc.name)) {
          out.insert(var_node(d.loc.name));
        } else {
          out.insert(var_node("?" + d.loc.name));  // read before any write
        }
        continue;
      }
      auto j = static_cast<size_t>(d.instr);
      const auto& s = sem_[j];
      if (s.is_copy) {
        if (copy_const_[j] >= 0) {
          out.insert(copy_const_[j]);
        } else {
          sources(j, *s.uses[0].loc, seen, out);
        }
      } else if (s.secondary_def && d.loc == *s.secondary_def) {
        out.insert(secondary_node_[j]);
      } else {
        out.insert(op_node_[j]);
      }
    }
  }

  std::set<int> sources(size_t at, const Location& loc) {
    std::set<std::pair<size_t, Location>> seen;
    std::set<int> out;
    sources(at, loc, seen, out);
    return out;
  }

  void add_edge(int from, int to, int port) {
    if (from == to) {
      g_.nodes[static_cast<size_t>(from)].self_loops |= 1u << port;
    } else {
      data_.insert({from, to, port});
    }
  }

  void data_edges() {
    for (size_t i = 0; i < a_.code.size(); ++i) {
      int node = op_node_[i];
      if (node < 0) continue;
      const auto& s = sem_[i];
      for (const auto& u : s.uses) {
        if (u.imm) {
          add_edge(const_node(*u.imm, static_cast<int>(i)), node, u.port);
        } else if (u.loc) {
          for (int src : sources(i, *u.loc)) add_edge(src, node, u.port);
        }
      }
      if (s.is_store) {
        const auto& target = s.defs[0].name;
        if (!minicc::is_temp(target)) add_edge(node, var_node(target), kPortDefines);
      }
    }
  }

  void exit_edges() {
    const size_t exit = a_.code.size();
    std::set<std::string> stored;
    for (size_t i = 0; i < exit; ++i) {
      for (const auto& d : sem_[i].defs) {
        if (d.kind == Location::Kind::kMem && !minicc::is_temp(d.name)) stored.insert(d.name);
      }
    }
    for (const auto& name : stored) {
      for (int src : sources(exit, Location::mem(name))) add_edge(src, var_node(name), kPortFinal);
    }
  }

  // --- control dependence ---------------------------------------------------

  void control_edges() {
    const size_t n = a_.code.size();
    const size_t total = n + 1;
    std::vector<Bits> pdom(total, Bits(total, true));
    pdom[n] = Bits(total);
    pdom[n].set(n);
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t k = n; k-- > 0;) {
        Bits b(total, true);
        for (size_t s : succ_[k]) b &= pdom[s];
        b.set(k);
        if (!(b == pdom[k])) {
          pdom[k] = std::move(b);
          changed = true;
        }
      }
    }
    auto ipdom = [&](size_t x) -> size_t {
      size_t best = total;
      size_t best_count = 0;
      for (size_t d = 0; d < total; ++d) {
        if (d == x || !pdom[x].test(d)) continue;
        size_t c = pdom[d].count();
        if (c > best_count) {
          best_count = c;
          best = d;
        }
      }
      return best;
    };
    std::vector<size_t> ip(total);
    for (size_t x = 0; x < total; ++x) ip[x] = ipdom(x);

    for (size_t a = 0; a < n; ++a) {
      if (succ_[a].size() < 2) continue;
      int from = op_node_[a];
      for (size_t b : succ_[a]) {
        if (pdom[a].test(b)) continue;
        size_t stop = ip[a];
        for (size_t w = b; w != stop && w < n; w = ip[w]) {
          int to = op_node_[w] >= 0 ? op_node_[w] : copy_const_[w];
          if (to < 0) continue;
          if (to == from) {
            g_.nodes[static_cast<size_t>(from)].self_loops |= 1u << kPortControl;
          } else {
            control_.insert({from, to, 0});
          }
        }
      }
    }
  }

  void finish() {
    g_.data.assign(data_.begin(), data_.end());
    g_.control.assign(control_.begin(), control_.end());
  }

  const minicc::AsmProgram& a_;
  std::vector<InstructionSemantics> sem_;
  std::map<std::string, size_t> labels_;
  std::vector<std::vector<size_t>> succ_;
  std::vector<Def> defs_;
  std::map<std::pair<int, Location>, int> def_ids_;
  std::map<Location, std::vector<int>> by_loc_;
  std::vector<Bits> in_;
  std::vector<int> op_node_, secondary_node_, copy_const_;
  std::map<std::string, int> var_nodes_;
  std::set<Edge> data_, control_;
  Pdg g_;
};

}  // namespace

int Pdg::find_var(const std::string& name) const {
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == NodeKind::kVar && nodes[i].label == name) return static_cast<int>(i);
  }
  return -1;
}

Pdg build_pdg(const minicc::AsmProgram& a, const minicc::Compiler& compiler) { return Builder(a, &compiler).build(); }

Pdg build_pdg(const minicc::AsmProgram& a) { return Builder(a, nullptr).build(); }

std::string describe(const Node& n) {
  switch (n.kind) {
    case NodeKind::kVar: return "var " + n.label;
    case NodeKind::kConst: return "const " + std::to_string(n.value);
    case NodeKind::kOp: return n.label;
  }
  return "?";
}

std::string export_dot(const Pdg& g) {
  std::ostringstream os;
  os << "digraph pdg {\n";
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const Node& n = g.nodes[i];
    const char* shape = n.kind == NodeKind::kVar ? "ellipse" : n.kind == NodeKind::kConst ? "plaintext" : "box";
    os << "  n" << i << " [shape=" << shape << ", label=\"" << describe(n);
    if (n.self_loops) os << " (loop " << n.self_loops << ")";
    os << "\"];\n";
  }
  for (const auto& e : g.data) os << "  n" << e.from << " -> n" << e.to << " [label=\"" << e.port << "\"];\n";
  for (const auto& e : g.control) os << "  n" << e.from << " -> n" << e.to << " [style=dashed];\n";
  os << "}\n";
  return os.str();
}

}  // namespace nmdec::pdg
