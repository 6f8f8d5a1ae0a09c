#pragma once

#include <random>
#include <string>
#include <vector>

#include "nmdec/nmt/model.hpp"

namespace nmdec::nmt::testing_support {

inline Vocab digits_vocab(int n) {
  Vocab v;
  for (int i = 0; i < n; ++i) v.add("t" + std::to_string(i));
  return v;
}

// Random sequences of 1 to 6 tokens mapped to themselves.
inline std::vector<Example> copy_task(int count, int vocab, std::mt19937& rng) {
  std::vector<Example> out;
  for (int i = 0; i < count; ++i) {
    TokenSeq s;
    int len = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < len; ++k) s.push_back("t" + std::to_string(rng() % static_cast<unsigned>(vocab)));
    out.push_back({s, s});
  }
  return out;
}

inline Hyper small_hyper() {
  Hyper h;
  h.hidden_size = 32;
  h.embedding_size = 16;
  h.batch_size = 16;
  h.validate_every_batches = 32;
  h.patience = 5;
  h.max_epochs = 60;
  h.learning_rate = 3e-3;
  h.seed = 5;
  return h;
}

}  // namespace nmdec::nmt::testing_support
