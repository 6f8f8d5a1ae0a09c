#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmdec/nmt/network.hpp"
#include "nmdec/nmt/vocab.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::nmt {

struct Hyper {
  int encoder_layers = 1;
  int decoder_layers = 1;
  int hidden_size = 64;
  int embedding_size = 64;
  int beam_width = 5;
  int batch_size = 32;
  int validate_every_batches = 100;
  int patience = 10;
  int max_epochs = 2000;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  double init_scale = 0.1;
  uint64_t seed = 1;

  static Hyper paper();
  static Hyper desk();
  void validate() const;  // throws std::invalid_argument
  bool operator==(const Hyper&) const = default;
};

struct Example {
  TokenSeq src;
  TokenSeq tgt;
};

struct Hypothesis {
  TokenSeq tokens;
  double score = 0;     // log_prob divided by the number of emitted tokens, </s> included
  double log_prob = 0;
  bool finished = true; // false when the length cap was hit before </s>
};

struct ValidationPoint {
  long batches = 0;
  int epoch = 0;
  double exact_match = 0;  // fraction of greedy decodes equal to the target
  double loss = 0;         // mean per-sequence cross-entropy
};

struct TrainReport {
  enum class Stop { kPatience, kMaxEpochs };
  int epochs = 0;
  long batches = 0;
  std::vector<ValidationPoint> curve;
  Stop stop = Stop::kMaxEpochs;
  double best_exact_match = 0;  // at the restored snapshot
  double seconds = 0;
};

const char* to_string(TrainReport::Stop s);

class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabShrunk : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Model {
 public:
  Model(Vocab src, Vocab tgt, Hyper h);

  const Vocab& src_vocab() const { return src_; }
  const Vocab& tgt_vocab() const { return tgt_; }
  const Hyper& hyper() const { return hyper_; }
  Hyper& mutable_hyper() { return hyper_; }
  const Network<float>& network() const { return net_; }
  Network<float>& network() { return net_; }

  // Progress callback receives each validation point as it is recorded.
  TrainReport train(const std::vector<Example>& train, const std::vector<Example>& val,
                    const std::function<void(const ValidationPoint&)>& progress = {});

  // max_len 0 means 2 * |src| + 10.
  std::vector<Hypothesis> translate(const TokenSeq& src, int beam, int max_len = 0) const;
  Hypothesis greedy(const TokenSeq& src, int max_len = 0) const;
  // Log-probability of emitting tgt followed by </s>.
  double score(const TokenSeq& src, const TokenSeq& tgt) const;
  // Per-step output distributions while forcing tgt (|tgt| + 1 columns).
  Eigen::MatrixXf distributions(const TokenSeq& src, const TokenSeq& tgt) const;

  // Mean per-sequence loss on a dataset, without updating anything.
  double evaluate_loss(const std::vector<Example>& data) const;
  double exact_match(const std::vector<Example>& data) const;

  // Copies retained tokens' rows; new tokens start fresh. Throws VocabShrunk.
  Model extended(const Vocab& src, const Vocab& tgt) const;

  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

  // Adam state; exposed for checkpoint tests.
  struct Optimizer {
    Network<float>::Tensors m, v;
    long step = 0;
  };
  const Optimizer& optimizer() const { return opt_; }

 private:
  void reset_optimizer();
  void update(Network<float>::Tensors& grads);

  Vocab src_, tgt_;
  Hyper hyper_;
  Network<float> net_;
  Optimizer opt_;
  uint64_t train_calls_ = 0;
};

}  // namespace nmdec::nmt
