#include "nmdec/rules/rules.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "nmdec/canonical/names.hpp"
#include "nmdec/lang/text.hpp"

namespace nmdec::rules {

namespace {

bool is_label_ref(const std::string& t) {
  static const std::regex re(R"(\.L[0-9]+)");
  return std::regex_match(t, re);
}

bool is_label_def(const std::string& t) {
  return t.size() > 1 && t.back() == ':' && is_label_ref(t.substr(0, t.size() - 1));
}

bool is_variable(const std::string& t) {
  return is_identifier(t) && !canonical::is_reserved_token(t) && !minicc::is_temp(t);
}

bool same_shape(const TokenSeq& a, const TokenSeq& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i] && !(is_number(a[i]) && is_number(b[i]))) return false;
  return true;
}

std::vector<int32_t> probe_values(int32_t v) {
  std::vector<int32_t> out;
  for (int64_t c : {int64_t{v} + 1, int64_t{v} + 2, int64_t{v} * 2, int64_t{v} - 1})
    if (c != v && c >= INT32_MIN && c <= INT32_MAX &&
        std::find(out.begin(), out.end(), static_cast<int32_t>(c)) == out.end())
      out.push_back(static_cast<int32_t>(c));
  return out;
}

class Namer {
 public:
  explicit Namer(char kind) : kind_(kind) {}
  const std::string& name(const std::string& concrete) {
    auto it = names_.find(concrete);
    if (it != names_.end()) return it->second;
    std::string n = std::string(1, kind_) + "_" + std::to_string(names_.size() + 1);
    return names_.emplace(concrete, std::move(n)).first->second;
  }
  const std::string* find(const std::string& concrete) const {
    auto it = names_.find(concrete);
    return it == names_.end() ? nullptr : &it->second;
  }
  void bind(Binding& b) const {
    for (const auto& [concrete, n] : names_) b[n] = concrete;
  }

 private:
  char kind_;
  std::unordered_map<std::string, std::string> names_;
};

}  // namespace

bool is_placeholder(const std::string& token) {
  static const std::regex re(R"([XNL]_[1-9][0-9]*:?)");
  return std::regex_match(token, re);
}

Abstraction abstract_pair(const minicc::AsmProgram& input, const lang::Program& decompiled,
                          const minicc::Compiler& compiler) {
  const TokenSeq low = minicc::asm_tokens(input);
  if (minicc::asm_tokens(compiler.compile(decompiled)) != low)
    throw CorrespondenceUnknown("recompilation differs from the input listing");
  const TokenSeq high = lang::emit_tokens(decompiled);
  const std::vector<int32_t> slots = lang::number_values(decompiled);

  std::vector<size_t> high_numbers;
  for (size_t i = 0; i < high.size(); ++i)
    if (is_number(high[i])) high_numbers.push_back(i);
  if (high_numbers.size() != slots.size())
    throw CorrespondenceUnknown("source literals do not line up with their tokens");

  // influence[j]: source slots whose change moves low number j.
  std::vector<std::set<size_t>> influence(low.size());
  std::vector<std::set<size_t>> identical(low.size());
  for (size_t k = 0; k < slots.size(); ++k) {
    for (int32_t probe : probe_values(slots[k])) {
      lang::Program changed = decompiled;
      *lang::number_slots(changed)[k] = probe;
      TokenSeq t = minicc::asm_tokens(compiler.compile(changed));
      if (!same_shape(t, low)) continue;
      for (size_t j = 0; j < low.size(); ++j) {
        if (t[j] == low[j]) continue;
        influence[j].insert(k);
        if (low[j] == std::to_string(slots[k]) && t[j] == std::to_string(probe)) identical[j].insert(k);
      }
      break;
    }
  }

  // Per value: structural occurrences force it concrete everywhere; any
  // non-identity occurrence pins its placeholder.
  std::set<std::string> concrete_values, pinned_values;
  std::vector<bool> slot_identity(slots.size(), false);
  for (size_t j = 0; j < low.size(); ++j) {
    if (!is_number(low[j])) continue;
    if (influence[j].size() > 1)
      throw CorrespondenceUnknown("number '" + low[j] + "' depends on several source literals");
    if (influence[j].empty()) {
      concrete_values.insert(low[j]);
    } else if (identical[j] == influence[j]) {
      slot_identity[*influence[j].begin()] = true;
    } else {
      pinned_values.insert(low[j]);
    }
  }
  for (size_t k = 0; k < slots.size(); ++k)
    if (!slot_identity[k]) pinned_values.insert(std::to_string(slots[k]));

  Namer vars('X'), nums('N'), labels('L');
  Abstraction out;
  for (const auto& t : low) {
    if (is_variable(t)) {
      out.low.push_back(vars.name(t));
    } else if (is_label_ref(t)) {
      out.low.push_back(labels.name(t));
    } else if (is_label_def(t)) {
      out.low.push_back(labels.name(t.substr(0, t.size() - 1)) + ":");
    } else if (is_number(t) && !concrete_values.count(t)) {
      const std::string& n = nums.name(t);
      if (pinned_values.count(t)) out.fixed[n] = t;
      out.low.push_back(n);
    } else {
      out.low.push_back(t);
    }
  }
  for (const auto& t : high) {
    if (is_variable(t)) {
      const std::string* n = vars.find(t);
      if (!n) throw CorrespondenceUnknown("variable '" + t + "' does not occur in the listing");
      out.high.push_back(*n);
    } else if (is_number(t) && !concrete_values.count(t) && !pinned_values.count(t)) {
      const std::string* n = nums.find(t);
      if (!n) throw CorrespondenceUnknown("literal '" + t + "' has no listing counterpart");
      out.high.push_back(*n);
    } else {
      out.high.push_back(t);
    }
  }
  vars.bind(out.binding);
  nums.bind(out.binding);
  labels.bind(out.binding);
  return out;
}

Extraction extract_rules(const std::vector<SuccessPair>& successes, const minicc::Compiler& compiler) {
  Extraction out;
  std::unordered_map<std::string, size_t> index;
  std::vector<std::set<std::string>> seen;
  for (const auto& [input, program] : successes) {
    Abstraction a;
    try {
      a = abstract_pair(input, program, compiler);
    } catch (const CorrespondenceUnknown&) {
      ++out.skipped;
      continue;
    }
    std::string key = join(a.low) + '\n' + join(a.high);
    for (const auto& [n, v] : a.fixed) key += '\n' + n + '=' + v;
    auto [it, fresh] = index.emplace(key, out.rules.size());
    if (fresh) {
      out.rules.push_back({std::move(a.low), std::move(a.high), std::move(a.fixed), 0});
      seen.emplace_back();
    }
    std::string concrete = join(minicc::asm_tokens(input)) + '\n' + lang::to_source(program);
    if (seen[it->second].insert(concrete).second) ++out.rules[it->second].support;
  }
  std::stable_sort(out.rules.begin(), out.rules.end(),
                   [](const Rule& a, const Rule& b) { return a.support > b.support; });
  return out;
}

std::optional<Binding> match(const TokenSeq& pattern, const TokenSeq& tokens) {
  if (pattern.size() != tokens.size()) return std::nullopt;
  Binding b;
  std::set<std::string> bound_vars;
  for (size_t i = 0; i < pattern.size(); ++i) {
    const std::string& p = pattern[i];
    const std::string& t = tokens[i];
    if (!is_placeholder(p)) {
      if (p != t) return std::nullopt;
      continue;
    }
    std::string name = p;
    std::string value = t;
    if (p.back() == ':') {
      if (!is_label_def(t)) return std::nullopt;
      name.pop_back();
      value.pop_back();
    } else if (p[0] == 'L') {
      if (!is_label_ref(t)) return std::nullopt;
    } else if (p[0] == 'N') {
      if (!is_number(t)) return std::nullopt;
    } else if (!is_variable(t)) {
      return std::nullopt;
    }
    auto [it, fresh] = b.emplace(name, value);
    if (!fresh && it->second != value) return std::nullopt;
    if (fresh && p[0] == 'X' && !bound_vars.insert(value).second) return std::nullopt;
  }
  return b;
}

TokenSeq instantiate(const TokenSeq& pattern, const Binding& binding) {
  TokenSeq out;
  out.reserve(pattern.size());
  for (const auto& p : pattern) {
    if (!is_placeholder(p)) {
      out.push_back(p);
      continue;
    }
    bool def = p.back() == ':';
    auto it = binding.find(def ? p.substr(0, p.size() - 1) : p);
    if (it == binding.end()) throw std::invalid_argument("unbound placeholder " + p);
    out.push_back(def ? it->second + ":" : it->second);
  }
  return out;
}

std::optional<Binding> match(const Rule& r, const TokenSeq& tokens) {
  auto b = match(r.low_pattern, tokens);
  if (!b) return std::nullopt;
  for (const auto& [n, v] : r.fixed) {
    auto it = b->find(n);
    if (it == b->end() || it->second != v) return std::nullopt;
  }
  return b;
}

std::optional<lang::Program> apply_rule(const Rule& r, const minicc::AsmProgram& a) {
  auto b = match(r, minicc::asm_tokens(a));
  if (!b) return std::nullopt;
  try {
    return lang::parse_tokens(instantiate(r.high_pattern, *b));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void write_jsonl(const std::vector<Rule>& rules, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RulesIoError("cannot write " + path.string());
  for (const auto& r : rules) {
    nlohmann::ordered_json j;
    j["low"] = join(r.low_pattern);
    j["high"] = join(r.high_pattern);
    j["fixed"] = r.fixed;
    j["support"] = r.support;
    out << j.dump() << '\n';
  }
  if (!out) throw RulesIoError("write failed: " + path.string());
}

std::vector<Rule> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RulesIoError("cannot read " + path.string());
  std::vector<Rule> out;
  std::string line;
  for (size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Rule r{split_ws(j.at("low").get<std::string>()), split_ws(j.at("high").get<std::string>()), {},
             j.at("support").get<size_t>()};
      if (j.contains("fixed")) r.fixed = j.at("fixed").get<Binding>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw RulesIoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace nmdec::rules
