#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "nmdec/nmt/model.hpp"
#include "nmdec/nmt/network.hpp"
#include "support/nmt_tasks.hpp"

namespace nmdec::nmt {
namespace {

using testing_support::copy_task;
using testing_support::digits_vocab;
using testing_support::small_hyper;

// Trained once and shared by the tests that need a working model.
const Model& copy_model() {
  static const Model m = [] {
    std::mt19937 rng(1);
    auto train = copy_task(500, 10, rng);
    auto val = copy_task(100, 10, rng);
    Model model(digits_vocab(10), digits_vocab(10), small_hyper());
    model.train(train, val);
    return model;
  }();
  return m;
}

TEST(Vocab, ReservedIdsAndRoundTrip) {
  Vocab v = Vocab::from_corpus({{"a", "b"}, {"b", "c"}});
  EXPECT_EQ(v.size(), Vocab::kReserved + 3);
  EXPECT_EQ(v.id("<pad>"), Vocab::kPad);
  EXPECT_EQ(v.id("</s>"), Vocab::kEos);
  EXPECT_EQ(v.id("zzz"), Vocab::kUnk);
  EXPECT_EQ(v.decode(v.encode({"c", "a"})), (TokenSeq{"c", "a"}));
}

TEST(Model, SameSeedSameParameters) {
  Model a(digits_vocab(16), digits_vocab(21), small_hyper());
  Model b(digits_vocab(16), digits_vocab(21), small_hyper());
  for (int p = 0; p < kNumParams; ++p) EXPECT_EQ(a.network().w[p], b.network().w[p]) << param_name(Param(p));
  EXPECT_EQ(a.network().w[kSrcEmbedding].cols(), 20);
  EXPECT_EQ(a.network().w[kTgtEmbedding].cols(), 25);
  EXPECT_EQ(a.network().w[kOutput].rows(), 25);
}

TEST(Model, StepDistributionsAreNormalized) {
  Model m(digits_vocab(8), digits_vocab(8), small_hyper());
  Eigen::MatrixXf d = m.distributions({"t1", "t2", "t3"}, {"t4", "t5"});
  ASSERT_EQ(d.cols(), 3);
  for (Eigen::Index j = 0; j < d.cols(); ++j) EXPECT_NEAR(d.col(j).sum(), 1.0, 1e-6);
}

TEST(Network, GradientsMatchCentralDifferences) {
  Network<double> net(12, 11, 6, 8);
  std::mt19937_64 rng(3);
  net.init_uniform(rng, 0.5);
  std::vector<std::vector<int>> s{{4, 5, 6, 7}, {8, 9}, {10, 4, 5}}, t{{4, 5, 6}, {7}, {8, 9, 10, 4}};
  std::vector<const std::vector<int>*> sp, tp;
  for (auto& x : s) sp.push_back(&x);
  for (auto& x : t) tp.push_back(&x);
  Batch b = make_batch(sp, tp, Vocab::kBos, Vocab::kEos, Vocab::kPad);
  auto g = net.zeros_like();
  net.loss(b, &g);
  const double h = 1e-3;
  for (int p = 0; p < kNumParams; ++p) {
    double worst = 0;
    for (Eigen::Index i = 0; i < net.w[p].size(); ++i) {
      double& x = net.w[p].data()[i];
      const double old = x;
      x = old + h;
      const double up = net.loss(b, nullptr);
      x = old - h;
      const double down = net.loss(b, nullptr);
      x = old;
      const double numeric = (up - down) / (2 * h);
      const double analytic = g[p].data()[i];
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    }
    EXPECT_LT(worst, 1e-4) << param_name(Param(p));
  }
}

TEST(Network, FullBatchLossDecreases) {
  Network<float> net(10, 10, 8, 8);
  std::mt19937_64 rng(4);
  net.init_uniform(rng, 0.1f);
  std::vector<std::vector<int>> s{{4, 5, 6}, {7, 8}, {9, 4}}, t{{5, 6}, {8}, {4, 9, 7}};
  std::vector<const std::vector<int>*> sp, tp;
  for (auto& x : s) sp.push_back(&x);
  for (auto& x : t) tp.push_back(&x);
  Batch b = make_batch(sp, tp, Vocab::kBos, Vocab::kEos, Vocab::kPad);
  float prev = net.loss(b, nullptr);
  for (int step = 0; step < 5; ++step) {
    auto g = net.zeros_like();
    net.loss(b, &g);
    for (int p = 0; p < kNumParams; ++p) net.w[p] -= 0.05f * g[p];
    float now = net.loss(b, nullptr);
    EXPECT_LT(now, prev) << "step " << step;
    prev = now;
  }
}

TEST(Training, SinglePairOverfits) {
  Hyper h = small_hyper();
  h.batch_size = 1;
  h.max_epochs = 200;
  h.validate_every_batches = 50;
  Example e{{"t1", "t7", "t3", "t3"}, {"t9", "t2", "t2", "t5", "t0"}};
  Model m(digits_vocab(10), digits_vocab(10), h);
  m.train({e}, {e});
  EXPECT_EQ(m.greedy(e.src).tokens, e.tgt);
}

TEST(Training, CopyTaskGeneralizes) {
  std::mt19937 rng(77);
  auto held_out = copy_task(300, 10, rng);
  EXPECT_GE(copy_model().exact_match(held_out), 0.99);
}

TEST(Training, PatienceWithFrozenLearningRate) {
  Hyper h = small_hyper();
  h.learning_rate = 0;
  h.patience = 10;
  h.validate_every_batches = 1;
  h.max_epochs = 1000;
  std::mt19937 rng(2);
  auto data = copy_task(20, 10, rng);
  Model m(digits_vocab(10), digits_vocab(10), h);
  TrainReport r = m.train(data, data);
  EXPECT_EQ(r.stop, TrainReport::Stop::kPatience);
  EXPECT_EQ(r.curve.size(), 11u);
}

TEST(Training, DeterministicCurves) {
  std::mt19937 rng(3);
  auto train = copy_task(100, 10, rng);
  auto val = copy_task(20, 10, rng);
  Hyper h = small_hyper();
  h.max_epochs = 4;
  h.validate_every_batches = 3;
  Model a(digits_vocab(10), digits_vocab(10), h), b(digits_vocab(10), digits_vocab(10), h);
  TrainReport ra = a.train(train, val), rb = b.train(train, val);
  ASSERT_EQ(ra.curve.size(), rb.curve.size());
  for (size_t i = 0; i < ra.curve.size(); ++i) {
    EXPECT_EQ(ra.curve[i].loss, rb.curve[i].loss);
    EXPECT_EQ(ra.curve[i].exact_match, rb.curve[i].exact_match);
  }
}

TEST(Translate, BeamOneIsGreedyAndScoresAreConsistent) {
  const Model& m = copy_model();
  std::mt19937 rng(8);
  for (const auto& e : copy_task(30, 10, rng)) {
    Hypothesis g = m.greedy(e.src);
    auto beam1 = m.translate(e.src, 1);
    ASSERT_EQ(beam1.size(), 1u);
    EXPECT_EQ(beam1[0].tokens, g.tokens);
    ASSERT_TRUE(g.finished);
    EXPECT_DOUBLE_EQ(m.score(e.src, g.tokens), g.log_prob);
    auto beam5 = m.translate(e.src, 5);
    ASSERT_FALSE(beam5.empty());
    EXPECT_LE(beam5.size(), 5u);
    for (size_t i = 1; i < beam5.size(); ++i) EXPECT_GE(beam5[0].score, beam5[i].score);
  }
}

TEST(Translate, LengthCapFlagsUnfinished) {
  Model m(digits_vocab(5), digits_vocab(5), small_hyper());
  auto hs = m.translate({"t1", "t2"}, 3, 2);
  ASSERT_FALSE(hs.empty());
  for (const auto& h : hs) EXPECT_TRUE(h.finished || h.tokens.size() == 2u);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nmdec_test_" + name);
}

TEST(Checkpoint, RoundTripKeepsTranslations) {
  const Model& m = copy_model();
  auto path = temp_file("roundtrip.ckpt");
  m.save(path);
  Model back = Model::load(path);
  EXPECT_EQ(back.hyper(), m.hyper());
  EXPECT_EQ(back.src_vocab(), m.src_vocab());
  for (int p = 0; p < kNumParams; ++p) EXPECT_EQ(back.network().w[p], m.network().w[p]);
  EXPECT_EQ(back.optimizer().step, m.optimizer().step);
  std::mt19937 rng(9);
  for (const auto& e : copy_task(100, 10, rng)) {
    auto a = m.translate(e.src, 3), b = back.translate(e.src, 3);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].tokens, b[i].tokens);
      EXPECT_EQ(a[i].score, b[i].score);
    }
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncationAndVersionAreDetected) {
  Model m(digits_vocab(5), digits_vocab(5), small_hyper());
  auto path = temp_file("corrupt.ckpt");
  m.save(path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  EXPECT_THROW(Model::load(path), CorruptCheckpoint);
  {
    std::string bumped = bytes;
    bumped[8] = 9;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bumped.data(), static_cast<std::streamsize>(bumped.size()));
  }
  try {
    Model::load(path);
    ADD_FAILURE() << "expected CorruptCheckpoint";
  } catch (const CorruptCheckpoint& e) {
    EXPECT_NE(std::string(e.what()).find("version 9"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(ExtendVocab, IdenticalVocabsKeepParameters) {
  const Model& m = copy_model();
  Model e = m.extended(m.src_vocab(), m.tgt_vocab());
  for (int p = 0; p < kNumParams; ++p) EXPECT_EQ(e.network().w[p], m.network().w[p]) << param_name(Param(p));
}

TEST(ExtendVocab, NewTargetTokenAddsOneRow) {
  const Model& m = copy_model();
  Vocab tgt = m.tgt_vocab();
  const int fresh = tgt.add("brand_new");
  Model e = m.extended(m.src_vocab(), tgt);
  const auto& a = m.network().w;
  const auto& b = e.network().w;
  ASSERT_EQ(b[kOutput].rows(), a[kOutput].rows() + 1);
  EXPECT_EQ(b[kOutput].topRows(a[kOutput].rows()), a[kOutput]);
  EXPECT_EQ(b[kOutputBias].topRows(a[kOutputBias].rows()), a[kOutputBias]);
  EXPECT_EQ(b[kTgtEmbedding].leftCols(a[kTgtEmbedding].cols()), a[kTgtEmbedding]);
  EXPECT_EQ(b[kSrcEmbedding], a[kSrcEmbedding]);
  EXPECT_EQ(b[kOutputBias](fresh, 0), a[kOutputBias].minCoeff());

  std::mt19937 rng(10);
  for (const auto& ex : copy_task(50, 10, rng)) EXPECT_EQ(e.greedy(ex.src).tokens, m.greedy(ex.src).tokens);
}

TEST(ExtendVocab, ShrinkingIsRejected) {
  Model m(digits_vocab(5), digits_vocab(5), small_hyper());
  EXPECT_THROW(m.extended(digits_vocab(4), digits_vocab(5)), VocabShrunk);
}

}  // namespace
}  // namespace nmdec::nmt
