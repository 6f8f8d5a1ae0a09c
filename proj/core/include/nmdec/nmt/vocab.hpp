#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "nmdec/util/tokens.hpp"

namespace nmdec::nmt {

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocab();
  static Vocab from_corpus(const std::vector<TokenSeq>& seqs);

  int add(const std::string& token);  // existing id if present
  void add_all(const TokenSeq& seq);
  int id(const std::string& token) const;  // kUnk if absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const TokenSeq& seq) const;
  TokenSeq decode(const std::vector<int>& ids) const;  // stops at kEos, skips reserved

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace nmdec::nmt
