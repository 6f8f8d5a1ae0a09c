#include "nmdec/canonical/digits.hpp"

namespace nmdec::canonical {

namespace {
bool is_digit_token(const std::string& t) { return t.size() == 1 && t[0] >= '0' && t[0] <= '9'; }
}  // namespace

TokenSeq split_digits(const TokenSeq& tokens) {
  TokenSeq out;
  out.reserve(tokens.size() * 2);
  for (const auto& t : tokens) {
    if (!is_number(t)) {
      out.push_back(t);
      continue;
    }
    size_t start = 0;
    if (t[0] == '-') {
      out.push_back(kNegToken);
      start = 1;
    }
    for (size_t i = start; i < t.size(); ++i) out.emplace_back(1, t[i]);
  }
  return out;
}

TokenSeq fuse_digits(const TokenSeq& tokens) {
  TokenSeq out;
  out.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size();) {
    bool neg = tokens[i] == kNegToken && i + 1 < tokens.size() && is_digit_token(tokens[i + 1]);
    size_t j = neg ? i + 1 : i;
    if (j < tokens.size() && is_digit_token(tokens[j])) {
      std::string number = neg ? "-" : "";
      while (j < tokens.size() && is_digit_token(tokens[j])) number += tokens[j++];
      out.push_back(std::move(number));
      i = j;
    } else {
      out.push_back(tokens[i++]);
    }
  }
  return out;
}

}  // namespace nmdec::canonical
