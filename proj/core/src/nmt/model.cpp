#include "nmdec/nmt/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace nmdec::nmt {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Hyper Hyper::paper() {
  Hyper h;
  h.hidden_size = 100;
  h.embedding_size = 300;
  h.validate_every_batches = 1000;
  return h;
}

Hyper Hyper::desk() { return Hyper{}; }

void Hyper::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw std::invalid_argument(std::string(what) + " must be at least 1");
  };
  positive(encoder_layers, "encoder_layers");
  positive(decoder_layers, "decoder_layers");
  positive(hidden_size, "hidden_size");
  positive(embedding_size, "embedding_size");
  positive(beam_width, "beam_width");
  positive(batch_size, "batch_size");
  positive(validate_every_batches, "validate_every_batches");
  positive(patience, "patience");
  positive(max_epochs, "max_epochs");
  if (encoder_layers != 1 || decoder_layers != 1) throw std::invalid_argument("only single-layer stacks are supported");
  if (learning_rate < 0) throw std::invalid_argument("learning_rate must be non-negative");
}

const char* to_string(TrainReport::Stop s) { return s == TrainReport::Stop::kPatience ? "patience" : "max-epochs"; }

Model::Model(Vocab src, Vocab tgt, Hyper h)
    : src_(std::move(src)), tgt_(std::move(tgt)), hyper_(h),
      net_(src_.size(), tgt_.size(), h.embedding_size, h.hidden_size) {
  hyper_.validate();
  std::mt19937_64 rng(h.seed);
  net_.init_uniform(rng, static_cast<float>(h.init_scale));
  reset_optimizer();
}

void Model::reset_optimizer() {
  opt_.m = net_.zeros_like();
  opt_.v = net_.zeros_like();
  opt_.step = 0;
}

void Model::update(Network<float>::Tensors& grads) {
  double norm2 = 0;
  for (const auto& g : grads) norm2 += static_cast<double>(g.squaredNorm());
  const double norm = std::sqrt(norm2);
  if (norm > hyper_.clip_norm) {
    const auto scale = static_cast<float>(hyper_.clip_norm / norm);
    for (auto& g : grads) g *= scale;
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++opt_.step;
  const auto c1 = static_cast<float>(1.0 / (1.0 - std::pow(b1, static_cast<double>(opt_.step))));
  const auto c2 = static_cast<float>(1.0 / (1.0 - std::pow(b2, static_cast<double>(opt_.step))));
  const auto lr = static_cast<float>(hyper_.learning_rate);
  for (size_t p = 0; p < grads.size(); ++p) {
    auto g = grads[p].array();
    auto m = opt_.m[p].array();
    auto v = opt_.v[p].array();
    m = static_cast<float>(b1) * m + static_cast<float>(1 - b1) * g;
    v = static_cast<float>(b2) * v + static_cast<float>(1 - b2) * g.square();
    net_.w[p].array() -= lr * (m * c1) / ((v * c2).sqrt() + static_cast<float>(eps));
  }
}

namespace {

struct Encoded {
  std::vector<int> src, tgt;
};

std::vector<Encoded> encode_all(const std::vector<Example>& data, const Vocab& sv, const Vocab& tv) {
  std::vector<Encoded> out;
  out.reserve(data.size());
  for (const auto& e : data) out.push_back({sv.encode(e.src), tv.encode(e.tgt)});
  return out;
}

Batch batch_of(const std::vector<Encoded>& data, const std::vector<size_t>& idx) {
  std::vector<const std::vector<int>*> s, t;
  for (size_t i : idx) {
    s.push_back(&data[i].src);
    t.push_back(&data[i].tgt);
  }
  return make_batch(s, t, Vocab::kBos, Vocab::kEos, Vocab::kPad);
}

// Shuffled batches of similar source length.
std::vector<std::vector<size_t>> plan_epoch(const std::vector<Encoded>& data, int batch, std::mt19937_64& rng) {
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const size_t block = static_cast<size_t>(batch) * 16;
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < order.size(); start += block) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + block));
    std::stable_sort(first, last, [&](size_t a, size_t b) { return data[a].src.size() < data[b].src.size(); });
    for (auto it = first; it < last; it += std::min<std::ptrdiff_t>(batch, last - it)) {
      batches.emplace_back(it, it + std::min<std::ptrdiff_t>(batch, last - it));
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace

double Model::evaluate_loss(const std::vector<Example>& data) const {
  if (data.empty()) return 0;
  auto enc = encode_all(data, src_, tgt_);
  double total = 0;
  const size_t step = 64;
  for (size_t start = 0; start < enc.size(); start += step) {
    std::vector<size_t> idx;
    for (size_t i = start; i < std::min(enc.size(), start + step); ++i) idx.push_back(i);
    Batch b = batch_of(enc, idx);
    total += static_cast<double>(net_.loss(b, nullptr)) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(enc.size());
}

double Model::exact_match(const std::vector<Example>& data) const {
  if (data.empty()) return 0;
  size_t hits = 0;
  for (const auto& e : data) {
    Hypothesis h = greedy(e.src);
    hits += h.finished && h.tokens == e.tgt;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainReport Model::train(const std::vector<Example>& train, const std::vector<Example>& val,
                         const std::function<void(const ValidationPoint&)>& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  if (train.empty()) return report;
  auto data = encode_all(train, src_, tgt_);
  std::mt19937_64 rng(hyper_.seed * 0x9E3779B97F4A7C15ull + ++train_calls_);

  Network<float>::Tensors best = net_.w;
  bool have_best = false;
  double best_em = -1, best_loss = std::numeric_limits<double>::infinity(), snapshot_em = 0;
  int stale = 0;
  bool stop = false;

  auto validate = [&](int epoch) {
    ValidationPoint p;
    p.batches = report.batches;
    p.epoch = epoch;
    p.exact_match = exact_match(val);
    p.loss = evaluate_loss(val);
    report.curve.push_back(p);
    if (progress) progress(p);
    // Progress on either metric resets patience and moves the snapshot.
    if (p.exact_match > best_em || p.loss < best_loss) {
      best_em = std::max(best_em, p.exact_match);
      best_loss = std::min(best_loss, p.loss);
      snapshot_em = p.exact_match;
      best = net_.w;
      have_best = true;
      stale = 0;
    } else if (++stale >= hyper_.patience) {
      stop = true;
      report.stop = TrainReport::Stop::kPatience;
    }
  };

  for (int epoch = 1; epoch <= hyper_.max_epochs && !stop; ++epoch) {
    for (const auto& idx : plan_epoch(data, hyper_.batch_size, rng)) {
      Batch b = batch_of(data, idx);
      auto grads = net_.zeros_like();
      net_.loss(b, &grads);
      update(grads);
      ++report.batches;
      if (!val.empty() && report.batches % hyper_.validate_every_batches == 0) {
        validate(epoch);
        if (stop) break;
      }
    }
    report.epochs = epoch;
  }
  if (!val.empty() && report.curve.empty()) validate(report.epochs);
  if (have_best) net_.w = best;
  report.best_exact_match = snapshot_em;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

namespace {

int default_max_len(const TokenSeq& src, int max_len) {
  return max_len > 0 ? max_len : 2 * static_cast<int>(src.size()) + 10;
}

bool emittable(int id) { return id != Vocab::kPad && id != Vocab::kBos; }

}  // namespace

Hypothesis Model::greedy(const TokenSeq& src, int max_len) const {
  const int cap = default_max_len(src, max_len);
  auto enc = net_.encode(src_.encode(src));
  auto state = net_.initial_state(enc, 1);
  std::vector<int> out;
  Hypothesis h;
  h.finished = false;
  int prev = Vocab::kBos;
  for (int t = 0; t < cap; ++t) {
    Eigen::MatrixXf lp = net_.step(enc, state, {prev});
    int best = -1;
    for (int v = 0; v < lp.rows(); ++v) {
      if (emittable(v) && (best < 0 || lp(v, 0) > lp(best, 0))) best = v;
    }
    h.log_prob += static_cast<double>(lp(best, 0));
    if (best == Vocab::kEos) {
      h.finished = true;
      break;
    }
    out.push_back(best);
    prev = best;
  }
  h.tokens = tgt_.decode(out);
  h.score = h.log_prob / static_cast<double>(out.size() + (h.finished ? 1 : 0));
  return h;
}

std::vector<Hypothesis> Model::translate(const TokenSeq& src, int beam, int max_len) const {
  if (beam < 1) throw std::invalid_argument("beam must be at least 1");
  const int cap = default_max_len(src, max_len);
  auto enc = net_.encode(src_.encode(src));
  struct Live {
    std::vector<int> ids;
    double log_prob = 0;
  };
  std::vector<Live> live{Live{}};
  auto state = net_.initial_state(enc, 1);
  std::vector<Hypothesis> done;
  auto finish = [&](const Live& l, bool finished) {
    Hypothesis h;
    h.tokens = tgt_.decode(l.ids);
    h.log_prob = l.log_prob;
    h.finished = finished;
    h.score = l.log_prob / static_cast<double>(l.ids.size() + (finished ? 1 : 0));
    done.push_back(std::move(h));
  };
  for (int t = 0; t < cap && !live.empty() && static_cast<int>(done.size()) < beam; ++t) {
    std::vector<int> prev;
    for (const auto& l : live) prev.push_back(l.ids.empty() ? Vocab::kBos : l.ids.back());
    Eigen::MatrixXf lp = net_.step(enc, state, prev);
    struct Cand {
      double log_prob;
      int from;
      int token;
    };
    std::vector<Cand> cands;
    for (int j = 0; j < static_cast<int>(live.size()); ++j) {
      std::vector<int> ids;
      for (int v = 0; v < lp.rows(); ++v) {
        if (emittable(v)) ids.push_back(v);
      }
      const auto k = std::min<size_t>(static_cast<size_t>(beam), ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                        [&](int a, int b) { return lp(a, j) > lp(b, j) || (lp(a, j) == lp(b, j) && a < b); });
      for (size_t r = 0; r < k; ++r) {
        cands.push_back({live[static_cast<size_t>(j)].log_prob + static_cast<double>(lp(ids[r], j)), j, ids[r]});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.log_prob > b.log_prob; });
    std::vector<Live> next;
    std::vector<int> columns;
    for (const auto& c : cands) {
      if (static_cast<int>(next.size() + done.size()) >= beam) break;
      Live l = live[static_cast<size_t>(c.from)];
      l.log_prob = c.log_prob;
      if (c.token == Vocab::kEos) {
        finish(l, true);
      } else {
        l.ids.push_back(c.token);
        next.push_back(std::move(l));
        columns.push_back(c.from);
      }
    }
    live = std::move(next);
    if (!live.empty()) state = net_.select(state, columns);
  }
  if (static_cast<int>(done.size()) < beam) {
    for (const auto& l : live) finish(l, false);
  }
  std::stable_sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  if (static_cast<int>(done.size()) > beam) done.resize(static_cast<size_t>(beam));
  return done;
}

double Model::score(const TokenSeq& src, const TokenSeq& tgt) const {
  auto enc = net_.encode(src_.encode(src));
  auto state = net_.initial_state(enc, 1);
  auto ids = tgt_.encode(tgt);
  ids.push_back(Vocab::kEos);
  double total = 0;
  int prev = Vocab::kBos;
  for (int id : ids) {
    Eigen::MatrixXf lp = net_.step(enc, state, {prev});
    total += static_cast<double>(lp(id, 0));
    prev = id;
  }
  return total;
}

Eigen::MatrixXf Model::distributions(const TokenSeq& src, const TokenSeq& tgt) const {
  auto enc = net_.encode(src_.encode(src));
  auto state = net_.initial_state(enc, 1);
  auto ids = tgt_.encode(tgt);
  Eigen::MatrixXf out(tgt_.size(), static_cast<Eigen::Index>(ids.size() + 1));
  int prev = Vocab::kBos;
  for (size_t t = 0; t <= ids.size(); ++t) {
    out.col(static_cast<Eigen::Index>(t)) = net_.step(enc, state, {prev}).array().exp().matrix();
    if (t < ids.size()) prev = ids[t];
  }
  return out;
}

Model Model::extended(const Vocab& src, const Vocab& tgt) const {
  for (const auto& t : src_.tokens()) {
    if (!src.contains(t)) throw VocabShrunk("source token '" + t + "' missing from the extended vocabulary");
  }
  for (const auto& t : tgt_.tokens()) {
    if (!tgt.contains(t)) throw VocabShrunk("target token '" + t + "' missing from the extended vocabulary");
  }
  Model out(src, tgt, hyper_);
  out.train_calls_ = train_calls_;
  out.opt_.step = opt_.step;
  auto copy_all = [&](Param p) {
    out.net_.w[p] = net_.w[p];
    out.opt_.m[p] = opt_.m[p];
    out.opt_.v[p] = opt_.v[p];
  };
  for (Param p : {kEncInput, kEncRecurrent, kEncBias, kDecInput, kDecRecurrent, kDecBias, kAttention, kCombine}) {
    copy_all(p);
  }
  auto copy_cols = [&](Param p, const Vocab& from, const Vocab& to) {
    for (int i = 0; i < from.size(); ++i) {
      int j = to.id(from.token(i));
      out.net_.w[p].col(j) = net_.w[p].col(i);
      out.opt_.m[p].col(j) = opt_.m[p].col(i);
      out.opt_.v[p].col(j) = opt_.v[p].col(i);
    }
  };
  auto copy_rows = [&](Param p, const Vocab& from, const Vocab& to) {
    for (int i = 0; i < from.size(); ++i) {
      int j = to.id(from.token(i));
      out.net_.w[p].row(j) = net_.w[p].row(i);
      out.opt_.m[p].row(j) = opt_.m[p].row(i);
      out.opt_.v[p].row(j) = opt_.v[p].row(i);
    }
  };
  copy_cols(kSrcEmbedding, src_, src);
  copy_cols(kTgtEmbedding, tgt_, tgt);
  // New outputs start at the least likely bias so old argmaxes survive.
  const float floor = net_.w[kOutputBias].minCoeff();
  for (int j = 0; j < tgt.size(); ++j) {
    if (!tgt_.contains(tgt.token(j))) out.net_.w[kOutputBias](j, 0) = floor;
  }
  copy_rows(kOutput, tgt_, tgt);
  copy_rows(kOutputBias, tgt_, tgt);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'N', 'M', 'D', 'E', 'C', 'N', 'M', 'T'};
constexpr uint32_t kVersion = 1;
constexpr const char* kAttentionKind = "general";

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<uint32_t>(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }
  void tensor(const Eigen::MatrixXf& m) {
    pod<uint32_t>(static_cast<uint32_t>(m.rows()));
    pod<uint32_t>(static_cast<uint32_t>(m.cols()));
    buf_.append(reinterpret_cast<const char*>(m.data()), sizeof(float) * static_cast<size_t>(m.size()));
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, size_t end) : buf_(buf), end_(end) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    auto n = pod<uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::MatrixXf tensor(Eigen::Index rows, Eigen::Index cols) {
    auto r = pod<uint32_t>();
    auto c = pod<uint32_t>();
    if (r != rows || c != cols) throw CorruptCheckpoint("tensor shape does not match the recorded vocabularies");
    Eigen::MatrixXf m(rows, cols);
    const size_t bytes = sizeof(float) * static_cast<size_t>(m.size());
    need(bytes);
    std::memcpy(m.data(), buf_.data() + pos_, bytes);
    pos_ += bytes;
    return m;
  }
  bool at_end() const { return pos_ == end_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > end_) throw CorruptCheckpoint("checkpoint is truncated");
  }
  const std::string& buf_;
  size_t end_;
  size_t pos_ = 0;
};

void write_vocab(Writer& w, const Vocab& v) {
  w.pod<uint32_t>(static_cast<uint32_t>(v.size()));
  for (const auto& t : v.tokens()) w.str(t);
}

Vocab read_vocab(Reader& r) {
  Vocab v;
  auto n = r.pod<uint32_t>();
  for (uint32_t i = 0; i < n; ++i) {
    std::string t = r.str();
    if (v.add(t) != static_cast<int>(i)) throw CorruptCheckpoint("vocabulary entries are not distinct");
  }
  return v;
}

}  // namespace

void Model::save(const std::filesystem::path& path) const {
  Writer w;
  w.buffer().append(kMagic, sizeof(kMagic));
  w.pod<uint32_t>(kVersion);
  w.str(kAttentionKind);
  const Hyper& h = hyper_;
  for (int v : {h.encoder_layers, h.decoder_layers, h.hidden_size, h.embedding_size, h.beam_width, h.batch_size,
                h.validate_every_batches, h.patience, h.max_epochs}) {
    w.pod<int32_t>(v);
  }
  w.pod<double>(h.learning_rate);
  w.pod<double>(h.clip_norm);
  w.pod<double>(h.init_scale);
  w.pod<uint64_t>(h.seed);
  write_vocab(w, src_);
  write_vocab(w, tgt_);
  w.pod<uint32_t>(kNumParams);
  for (const auto& m : net_.w) w.tensor(m);
  w.pod<int64_t>(opt_.step);
  for (const auto& m : opt_.m) w.tensor(m);
  for (const auto& m : opt_.v) w.tensor(m);
  w.pod<uint64_t>(train_calls_);
  const auto crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(w.buffer().data()), static_cast<uInt>(w.buffer().size())));
  w.pod<uint32_t>(crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptCheckpoint("not a checkpoint file: " + path.string());
  }
  uint32_t version;
  std::memcpy(&version, buf.data() + sizeof(kMagic), sizeof(version));
  if (version != kVersion) {
    throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                            std::to_string(kVersion) + ")");
  }
  const size_t body = buf.size() - sizeof(uint32_t);
  uint32_t stored;
  std::memcpy(&stored, buf.data() + body, sizeof(stored));
  const auto crc = static_cast<uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(body)));
  if (crc != stored) throw CorruptCheckpoint("checkpoint checksum mismatch (truncated or damaged)");

  Reader r(buf, body);
  for (size_t i = 0; i < sizeof(kMagic) + sizeof(uint32_t); ++i) r.pod<char>();
  if (r.str() != kAttentionKind) throw CorruptCheckpoint("unknown attention kind");
  Hyper h;
  for (int* v : {&h.encoder_layers, &h.decoder_layers, &h.hidden_size, &h.embedding_size, &h.beam_width,
                 &h.batch_size, &h.validate_every_batches, &h.patience, &h.max_epochs}) {
    *v = r.pod<int32_t>();
  }
  h.learning_rate = r.pod<double>();
  h.clip_norm = r.pod<double>();
  h.init_scale = r.pod<double>();
  h.seed = r.pod<uint64_t>();
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw CorruptCheckpoint(std::string("invalid hyperparameters: ") + e.what());
  }
  Vocab src = read_vocab(r);
  Vocab tgt = read_vocab(r);
  Model m(std::move(src), std::move(tgt), h);
  if (r.pod<uint32_t>() != kNumParams) throw CorruptCheckpoint("unexpected tensor count");
  for (auto& t : m.net_.w) t = r.tensor(t.rows(), t.cols());
  m.opt_.step = r.pod<int64_t>();
  for (size_t p = 0; p < m.opt_.m.size(); ++p) m.opt_.m[p] = r.tensor(m.net_.w[p].rows(), m.net_.w[p].cols());
  for (size_t p = 0; p < m.opt_.v.size(); ++p) m.opt_.v[p] = r.tensor(m.net_.w[p].rows(), m.net_.w[p].cols());
  m.train_calls_ = r.pod<uint64_t>();
  if (!r.at_end()) throw CorruptCheckpoint("trailing bytes in checkpoint");
  return m;
}

}  // namespace nmdec::nmt
