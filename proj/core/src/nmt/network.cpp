#include "nmdec/nmt/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nmdec::nmt {

const char* param_name(Param p) {
  static const char* kNames[] = {"src_embedding", "tgt_embedding", "enc_input", "enc_recurrent",
                                 "enc_bias",      "dec_input",     "dec_recurrent", "dec_bias",
                                 "attention",     "combine",       "output",    "output_bias"};
  return kNames[p];
}

Batch make_batch(const std::vector<const std::vector<int>*>& src, const std::vector<const std::vector<int>*>& tgt,
                 int bos, int eos, int pad) {
  Batch b;
  b.size = static_cast<int>(src.size());
  for (int i = 0; i < b.size; ++i) {
    b.src_steps = std::max(b.src_steps, static_cast<int>(src[static_cast<size_t>(i)]->size()));
    b.tgt_steps = std::max(b.tgt_steps, static_cast<int>(tgt[static_cast<size_t>(i)]->size()) + 1);
  }
  b.src_steps = std::max(b.src_steps, 1);
  b.src = Eigen::MatrixXi::Constant(b.src_steps, b.size, pad);
  b.tgt_in = Eigen::MatrixXi::Constant(b.tgt_steps, b.size, pad);
  b.tgt_out = Eigen::MatrixXi::Constant(b.tgt_steps, b.size, pad);
  b.tgt_mask = Eigen::MatrixXi::Zero(b.tgt_steps, b.size);
  for (int i = 0; i < b.size; ++i) {
    const auto& s = *src[static_cast<size_t>(i)];
    const auto& t = *tgt[static_cast<size_t>(i)];
    // An empty source still gets one (padding) step so the encoder has a state.
    b.src_len.push_back(std::max<int>(1, static_cast<int>(s.size())));
    for (size_t k = 0; k < s.size(); ++k) b.src(static_cast<int>(k), i) = s[k];
    const int n = static_cast<int>(t.size());
    for (int k = 0; k <= n; ++k) {
      b.tgt_in(k, i) = k == 0 ? bos : t[static_cast<size_t>(k - 1)];
      b.tgt_out(k, i) = k == n ? eos : t[static_cast<size_t>(k)];
      b.tgt_mask(k, i) = 1;
    }
  }
  return b;
}

template <typename Scalar>
Network<Scalar>::Network(int src_vocab, int tgt_vocab, int embedding, int hidden)
    : embedding_(embedding), hidden_(hidden) {
  const int E = embedding, H = hidden;
  w[kSrcEmbedding] = Mat::Zero(E, src_vocab);
  w[kTgtEmbedding] = Mat::Zero(E, tgt_vocab);
  w[kEncInput] = Mat::Zero(4 * H, E);
  w[kEncRecurrent] = Mat::Zero(4 * H, H);
  w[kEncBias] = Mat::Zero(4 * H, 1);
  w[kDecInput] = Mat::Zero(4 * H, E + H);
  w[kDecRecurrent] = Mat::Zero(4 * H, H);
  w[kDecBias] = Mat::Zero(4 * H, 1);
  w[kAttention] = Mat::Zero(H, H);
  w[kCombine] = Mat::Zero(H, 2 * H);
  w[kOutput] = Mat::Zero(tgt_vocab, H);
  w[kOutputBias] = Mat::Zero(tgt_vocab, 1);
}

template <typename Scalar>
void Network<Scalar>::init_uniform(std::mt19937_64& rng, Scalar scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& m : w) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(u(rng)) * scale;
    }
  }
}

template <typename Scalar>
typename Network<Scalar>::Tensors Network<Scalar>::zeros_like() const {
  Tensors z;
  for (size_t i = 0; i < w.size(); ++i) z[i] = Mat::Zero(w[i].rows(), w[i].cols());
  return z;
}

namespace {

// Activations of one LSTM step over a batch.
template <typename Scalar>
struct LstmStep {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat in, h_prev, c_prev;  // inputs
  Mat i, f, o, g, tanh_c;  // gates
  Mat h, c;                // outputs before masking
};

template <typename Scalar, typename Mat>
void lstm_forward(const Mat& wx, const Mat& wh, const Mat& bias, LstmStep<Scalar>& s) {
  const Eigen::Index H = wh.cols();
  Mat gates = wx * s.in;
  gates.noalias() += wh * s.h_prev;
  gates.colwise() += bias.col(0);
  auto sig = [](const auto& x) -> Mat { return ((-x.array()).exp() + Scalar(1)).inverse().matrix(); };
  s.i = sig(gates.topRows(H));
  s.f = sig(gates.middleRows(H, H));
  s.o = sig(gates.middleRows(2 * H, H));
  s.g = gates.bottomRows(H).array().tanh().matrix();
  s.c = (s.f.array() * s.c_prev.array() + s.i.array() * s.g.array()).matrix();
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = (s.o.array() * s.tanh_c.array()).matrix();
}

// Given dL/dh and dL/dc of the step outputs, returns dL/d(gates) and
// writes dL/dc_prev.
template <typename Scalar, typename Mat>
Mat lstm_backward(const LstmStep<Scalar>& s, const Mat& dh, const Mat& dc_in, Mat& dc_prev) {
  const Eigen::Index H = s.h.rows(), B = s.h.cols();
  Mat dc = (dc_in.array() + dh.array() * s.o.array() * (Scalar(1) - s.tanh_c.array().square())).matrix();
  Mat dg(4 * H, B);
  dg.topRows(H) = (dc.array() * s.g.array() * s.i.array() * (Scalar(1) - s.i.array())).matrix();
  dg.middleRows(H, H) = (dc.array() * s.c_prev.array() * s.f.array() * (Scalar(1) - s.f.array())).matrix();
  dg.middleRows(2 * H, H) = (dh.array() * s.tanh_c.array() * s.o.array() * (Scalar(1) - s.o.array())).matrix();
  dg.bottomRows(H) = (dc.array() * s.i.array() * (Scalar(1) - s.g.array().square())).matrix();
  dc_prev = (dc.array() * s.f.array()).matrix();
  return dg;
}

template <typename Mat>
void softmax_columns(Mat& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

template <typename Mat>
void log_softmax_columns(Mat& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j);
    const auto mx = col.maxCoeff();
    col.array() -= mx;
    const auto lse = std::log(col.array().exp().sum());
    col.array() -= lse;
  }
}

}  // namespace

template <typename Scalar>
Scalar Network<Scalar>::loss(const Batch& b, Tensors* grads) const {
  const int E = embedding_, H = hidden_, B = b.size, S = b.src_steps, T = b.tgt_steps;
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(B);

  // Encoder.
  std::vector<LstmStep<Scalar>> enc(static_cast<size_t>(S));
  std::vector<Mat> enc_h(static_cast<size_t>(S)), enc_c(static_cast<size_t>(S));
  std::vector<Mat> mask(static_cast<size_t>(S));
  Mat h = Mat::Zero(H, B), c = Mat::Zero(H, B);
  for (int t = 0; t < S; ++t) {
    auto& s = enc[static_cast<size_t>(t)];
    s.in.resize(E, B);
    for (int k = 0; k < B; ++k) s.in.col(k) = w[kSrcEmbedding].col(b.src(t, k));
    s.h_prev = h;
    s.c_prev = c;
    lstm_forward(w[kEncInput], w[kEncRecurrent], w[kEncBias], s);
    Mat m(1, B);
    for (int k = 0; k < B; ++k) m(0, k) = t < b.src_len[static_cast<size_t>(k)] ? Scalar(1) : Scalar(0);
    for (int k = 0; k < B; ++k) {
      if (m(0, k) != Scalar(0)) {
        h.col(k) = s.h.col(k);
        c.col(k) = s.c.col(k);
      }
    }
    mask[static_cast<size_t>(t)] = m;
    enc_h[static_cast<size_t>(t)] = h;
    enc_c[static_cast<size_t>(t)] = c;
  }
  // Per-sequence memory banks, H x len.
  std::vector<Mat> bank(static_cast<size_t>(B));
  for (int k = 0; k < B; ++k) {
    const int len = b.src_len[static_cast<size_t>(k)];
    bank[static_cast<size_t>(k)].resize(H, len);
    for (int t = 0; t < len; ++t) bank[static_cast<size_t>(k)].col(t) = enc_h[static_cast<size_t>(t)].col(k);
  }

  // Decoder.
  struct DecStep {
    LstmStep<Scalar> lstm;
    Mat query;                   // H x B
    std::vector<Vec> align;      // per sequence
    Mat z;                       // 2H x B: [context; h]
    Mat att;                     // H x B attentional state
    Mat prob;                    // V x B
  };
  std::vector<DecStep> dec(static_cast<size_t>(T));
  Mat att = Mat::Zero(H, B);
  Scalar total = 0;
  for (int t = 0; t < T; ++t) {
    auto& d = dec[static_cast<size_t>(t)];
    d.lstm.in.resize(E + H, B);
    for (int k = 0; k < B; ++k) d.lstm.in.col(k).head(E) = w[kTgtEmbedding].col(b.tgt_in(t, k));
    d.lstm.in.bottomRows(H) = att;
    d.lstm.h_prev = h;
    d.lstm.c_prev = c;
    lstm_forward(w[kDecInput], w[kDecRecurrent], w[kDecBias], d.lstm);
    h = d.lstm.h;
    c = d.lstm.c;
    d.query = w[kAttention] * h;
    d.z.resize(2 * H, B);
    d.align.resize(static_cast<size_t>(B));
    for (int k = 0; k < B; ++k) {
      const Mat& hs = bank[static_cast<size_t>(k)];
      Vec a = hs.transpose() * d.query.col(k);
      a.array() -= a.maxCoeff();
      a = a.array().exp().matrix();
      a /= a.sum();
      d.z.col(k).head(H) = hs * a;
      d.align[static_cast<size_t>(k)] = std::move(a);
    }
    d.z.bottomRows(H) = h;
    d.att = (w[kCombine] * d.z).array().tanh().matrix();
    att = d.att;
    d.prob = w[kOutput] * d.att;
    d.prob.colwise() += w[kOutputBias].col(0);
    softmax_columns(d.prob);
    for (int k = 0; k < B; ++k) {
      if (b.tgt_mask(t, k)) total -= std::log(std::max(d.prob(b.tgt_out(t, k), k), std::numeric_limits<Scalar>::min()));
    }
  }
  if (!grads) return total * inv_b;

  Tensors& g = *grads;
  std::vector<Mat> dbank(static_cast<size_t>(B));
  for (int k = 0; k < B; ++k) dbank[static_cast<size_t>(k)] = Mat::Zero(H, bank[static_cast<size_t>(k)].cols());
  Mat datt_next = Mat::Zero(H, B), dh_next = Mat::Zero(H, B), dc_next = Mat::Zero(H, B);
  for (int t = T - 1; t >= 0; --t) {
    auto& d = dec[static_cast<size_t>(t)];
    Mat dlogits = d.prob;
    for (int k = 0; k < B; ++k) {
      if (b.tgt_mask(t, k)) {
        dlogits(b.tgt_out(t, k), k) -= Scalar(1);
        dlogits.col(k) *= inv_b;
      } else {
        dlogits.col(k).setZero();
      }
    }
    g[kOutput].noalias() += dlogits * d.att.transpose();
    g[kOutputBias] += dlogits.rowwise().sum();
    Mat datt = w[kOutput].transpose() * dlogits + datt_next;
    Mat dpre = (datt.array() * (Scalar(1) - d.att.array().square())).matrix();
    g[kCombine].noalias() += dpre * d.z.transpose();
    Mat dz = w[kCombine].transpose() * dpre;
    Mat dh = dz.bottomRows(H) + dh_next;
    Mat dquery(H, B);
    for (int k = 0; k < B; ++k) {
      const Mat& hs = bank[static_cast<size_t>(k)];
      const Vec& a = d.align[static_cast<size_t>(k)];
      Vec dctx = dz.col(k).head(H);
      Vec da = hs.transpose() * dctx;
      Vec ds = (a.array() * (da.array() - a.dot(da))).matrix();
      dbank[static_cast<size_t>(k)].noalias() += dctx * a.transpose();
      dbank[static_cast<size_t>(k)].noalias() += d.query.col(k) * ds.transpose();
      dquery.col(k) = hs * ds;
    }
    g[kAttention].noalias() += dquery * d.lstm.h.transpose();
    dh.noalias() += w[kAttention].transpose() * dquery;
    Mat dc_prev;
    Mat dg = lstm_backward(d.lstm, dh, dc_next, dc_prev);
    g[kDecInput].noalias() += dg * d.lstm.in.transpose();
    g[kDecRecurrent].noalias() += dg * d.lstm.h_prev.transpose();
    g[kDecBias] += dg.rowwise().sum();
    Mat din = w[kDecInput].transpose() * dg;
    for (int k = 0; k < B; ++k) g[kTgtEmbedding].col(b.tgt_in(t, k)) += din.col(k).head(E);
    datt_next = din.bottomRows(H);
    dh_next = w[kDecRecurrent].transpose() * dg;
    dc_next = dc_prev;
  }

  Mat dh = dh_next, dc = dc_next;
  for (int t = S - 1; t >= 0; --t) {
    auto& s = enc[static_cast<size_t>(t)];
    const Mat& m = mask[static_cast<size_t>(t)];
    for (int k = 0; k < B; ++k) {
      if (t < b.src_len[static_cast<size_t>(k)]) dh.col(k) += dbank[static_cast<size_t>(k)].col(t);
    }
    Mat dh_step = dh, dc_step = dc;
    Mat dh_pass = Mat::Zero(H, B), dc_pass = Mat::Zero(H, B);
    for (int k = 0; k < B; ++k) {
      if (m(0, k) == Scalar(0)) {
        dh_pass.col(k) = dh.col(k);
        dc_pass.col(k) = dc.col(k);
        dh_step.col(k).setZero();
        dc_step.col(k).setZero();
      }
    }
    Mat dc_prev;
    Mat dg = lstm_backward(s, dh_step, dc_step, dc_prev);
    g[kEncInput].noalias() += dg * s.in.transpose();
    g[kEncRecurrent].noalias() += dg * s.h_prev.transpose();
    g[kEncBias] += dg.rowwise().sum();
    Mat din = w[kEncInput].transpose() * dg;
    for (int k = 0; k < B; ++k) {
      if (m(0, k) != Scalar(0)) g[kSrcEmbedding].col(b.src(t, k)) += din.col(k);
    }
    dh = w[kEncRecurrent].transpose() * dg + dh_pass;
    dc = dc_prev + dc_pass;
  }
  return total * inv_b;
}

template <typename Scalar>
typename Network<Scalar>::Encoded Network<Scalar>::encode(const std::vector<int>& src) const {
  const int H = hidden_;
  const int S = std::max<int>(1, static_cast<int>(src.size()));
  Encoded e;
  e.states.resize(H, S);
  LstmStep<Scalar> s;
  s.h_prev = Mat::Zero(H, 1);
  s.c_prev = Mat::Zero(H, 1);
  for (int t = 0; t < S; ++t) {
    // An empty source reads one padding token, as in training batches.
    s.in = w[kSrcEmbedding].col(src.empty() ? 0 : src[static_cast<size_t>(t)]);
    lstm_forward(w[kEncInput], w[kEncRecurrent], w[kEncBias], s);
    e.states.col(t) = s.h;
    s.h_prev = s.h;
    s.c_prev = s.c;
  }
  e.h = s.h_prev.col(0);
  e.c = s.c_prev.col(0);
  return e;
}

template <typename Scalar>
typename Network<Scalar>::DecoderState Network<Scalar>::initial_state(const Encoded& e, int k) const {
  DecoderState s;
  s.h = e.h.replicate(1, k);
  s.c = e.c.replicate(1, k);
  s.attentional = Mat::Zero(hidden_, k);
  return s;
}

template <typename Scalar>
typename Network<Scalar>::Mat Network<Scalar>::step(const Encoded& e, DecoderState& st,
                                                     const std::vector<int>& prev) const {
  const int E = embedding_, H = hidden_;
  const int k = static_cast<int>(prev.size());
  LstmStep<Scalar> s;
  s.in.resize(E + H, k);
  for (int j = 0; j < k; ++j) s.in.col(j).head(E) = w[kTgtEmbedding].col(prev[static_cast<size_t>(j)]);
  s.in.bottomRows(H) = st.attentional;
  s.h_prev = st.h;
  s.c_prev = st.c;
  lstm_forward(w[kDecInput], w[kDecRecurrent], w[kDecBias], s);
  Mat scores = e.states.transpose() * (w[kAttention] * s.h);
  softmax_columns(scores);
  Mat z(2 * H, k);
  z.topRows(H) = e.states * scores;
  z.bottomRows(H) = s.h;
  st.attentional = (w[kCombine] * z).array().tanh().matrix();
  st.h = s.h;
  st.c = s.c;
  Mat logits = w[kOutput] * st.attentional;
  logits.colwise() += w[kOutputBias].col(0);
  log_softmax_columns(logits);
  return logits;
}

template <typename Scalar>
typename Network<Scalar>::DecoderState Network<Scalar>::select(const DecoderState& s,
                                                               const std::vector<int>& columns) const {
  DecoderState out;
  const auto n = static_cast<Eigen::Index>(columns.size());
  out.h.resize(hidden_, n);
  out.c.resize(hidden_, n);
  out.attentional.resize(hidden_, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.h.col(j) = s.h.col(columns[static_cast<size_t>(j)]);
    out.c.col(j) = s.c.col(columns[static_cast<size_t>(j)]);
    out.attentional.col(j) = s.attentional.col(columns[static_cast<size_t>(j)]);
  }
  return out;
}

template class Network<float>;
template class Network<double>;

}  // namespace nmdec::nmt
