#pragma once

#include <Eigen/Dense>
#include <array>
#include <random>
#include <vector>

namespace nmdec::nmt {

// Parameter tensors in checkpoint order.
enum Param {
  kSrcEmbedding,  // E x |src|, one column per token
  kTgtEmbedding,  // E x |tgt|
  kEncInput,      // 4H x E, gate rows ordered input, forget, output, cell
  kEncRecurrent,  // 4H x H
  kEncBias,       // 4H x 1
  kDecInput,      // 4H x (E + H), the second block reads the previous attentional state
  kDecRecurrent,  // 4H x H
  kDecBias,       // 4H x 1
  kAttention,     // H x H, score(h_t, h_s) = h_s . (W h_t)
  kCombine,       // H x 2H over [context; h_t]
  kOutput,        // |tgt| x H
  kOutputBias,    // |tgt| x 1
  kNumParams,
};

const char* param_name(Param p);

// Padded, column-per-sequence batch. Target steps are inputs
// <s> y1 .. yn against outputs y1 .. yn </s>.
struct Batch {
  int size = 0;
  int src_steps = 0;
  int tgt_steps = 0;
  Eigen::MatrixXi src;      // src_steps x size
  std::vector<int> src_len;
  Eigen::MatrixXi tgt_in;   // tgt_steps x size
  Eigen::MatrixXi tgt_out;  // tgt_steps x size
  Eigen::MatrixXi tgt_mask; // 1 where a step carries loss
};

Batch make_batch(const std::vector<const std::vector<int>*>& src, const std::vector<const std::vector<int>*>& tgt,
                 int bos, int eos, int pad);

template <typename Scalar>
class Network {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Tensors = std::array<Mat, kNumParams>;

  Network() = default;
  Network(int src_vocab, int tgt_vocab, int embedding, int hidden);

  void init_uniform(std::mt19937_64& rng, Scalar scale);
  Tensors zeros_like() const;

  int embedding() const { return embedding_; }
  int hidden() const { return hidden_; }

  // Sum of token cross-entropies divided by the batch size. Accumulates
  // gradients of that quantity into *grads when given.
  Scalar loss(const Batch& b, Tensors* grads) const;

  struct Encoded {
    Mat states;  // H x S
    Vec h, c;
  };
  Encoded encode(const std::vector<int>& src) const;

  // Decoder state for k parallel hypotheses, one column each.
  struct DecoderState {
    Mat h, c, attentional;
  };
  DecoderState initial_state(const Encoded& e, int k) const;
  // Advances every column by its previous token; returns log-probabilities
  // (|tgt| x k).
  Mat step(const Encoded& e, DecoderState& s, const std::vector<int>& prev) const;
  DecoderState select(const DecoderState& s, const std::vector<int>& columns) const;

  Tensors w;

 private:
  int embedding_ = 0;
  int hidden_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace nmdec::nmt
