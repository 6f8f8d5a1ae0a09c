#include "nmdec/nmt/vocab.hpp"

namespace nmdec::nmt {

Vocab::Vocab() {
  for (const char* t : {"<pad>", "<unk>", "<s>", "</s>"}) add(t);
}

Vocab Vocab::from_corpus(const std::vector<TokenSeq>& seqs) {
  Vocab v;
  for (const auto& s : seqs) v.add_all(s);
  return v;
}

int Vocab::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

void Vocab::add_all(const TokenSeq& seq) {
  for (const auto& t : seq) add(t);
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const { return ids_.count(token) > 0; }

const std::string& Vocab::token(int id) const { return tokens_.at(static_cast<size_t>(id)); }

std::vector<int> Vocab::encode(const TokenSeq& seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const auto& t : seq) out.push_back(id(t));
  return out;
}

TokenSeq Vocab::decode(const std::vector<int>& ids) const {
  TokenSeq out;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kUnk) {
      out.push_back(token(i));
    } else if (i >= kReserved) {
      out.push_back(token(i));
    }
  }
  return out;
}

}  // namespace nmdec::nmt
