#include "nmdec/canonical/names.hpp"

#include <set>

namespace nmdec::canonical {

namespace {

const std::set<std::string>& reserved() {
  static const std::set<std::string> kReserved = {
      "movl", "addl", "subl", "imull", "idivl", "sall", "sarl", "shrl", "cmpl", "leal",
      "jmp",  "jg",   "jge",  "jl",    "jle",   "je",   "jne",  "eax",  "ebx",  "ecx",
      "edx",  "if",   "else", "while", "ifelse", "NEG"};
  return kReserved;
}

std::string fresh_generic(const std::set<std::string>& taken, size_t& next) {
  std::string name;
  do {
    name = "X" + std::to_string(next++);
  } while (taken.count(name));
  return name;
}

}  // namespace

bool is_reserved_token(const std::string& token) { return reserved().count(token) > 0; }

const std::string& NameMap::generic(const std::string& original) {
  auto it = to_generic_.find(original);
  if (it != to_generic_.end()) return it->second;
  std::string g = "X" + std::to_string(to_generic_.size());
  to_original_[g] = original;
  return to_generic_.emplace(original, g).first->second;
}

const std::string* NameMap::find_generic(const std::string& original) const {
  auto it = to_generic_.find(original);
  return it == to_generic_.end() ? nullptr : &it->second;
}

const std::string* NameMap::find_original(const std::string& generic) const {
  auto it = to_original_.find(generic);
  return it == to_original_.end() ? nullptr : &it->second;
}

Abstracted abstract_names(const TokenSeq& tokens) {
  Abstracted out;
  out.tokens.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (is_identifier(t) && !is_reserved_token(t)) {
      out.tokens.push_back(out.names.generic(t));
    } else {
      out.tokens.push_back(t);
    }
  }
  return out;
}

lang::Program apply_names(lang::Program p, NameMap& names) {
  lang::rename_variables(p, [&](const std::string& n) { return names.generic(n); });
  return p;
}

lang::Program restore_names(lang::Program p, const NameMap& names) {
  std::set<std::string> originals;
  for (const auto& [orig, gen] : names.forward()) originals.insert(orig);
  std::map<std::string, std::string> extra;
  size_t next = names.size();
  lang::rename_variables(p, [&](const std::string& n) -> std::string {
    if (const std::string* o = names.find_original(n)) return *o;
    if (!originals.count(n)) return n;
    auto it = extra.find(n);
    if (it != extra.end()) return it->second;
    std::set<std::string> taken = originals;
    for (const auto& [k, v] : extra) taken.insert(v);
    return extra[n] = fresh_generic(taken, next);
  });
  return p;
}

}  // namespace nmdec::canonical
