#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nmdec/lang/grammar.hpp"
#include "nmdec/minicc/compiler.hpp"
#include "nmdec/nmt/model.hpp"
#include "nmdec/util/tokens.hpp"

namespace nmdec::driver {

enum class Provenance { kRandom, kFailedTranslation };

const char* to_string(Provenance p);
Provenance parse_provenance(std::string_view s);  // throws std::invalid_argument

// high: post-order source, low: cleaned assembly; both canonical.
struct SamplePair {
  TokenSeq high;
  TokenSeq low;
  Provenance provenance = Provenance::kRandom;
  bool operator==(const SamplePair&) const = default;
};

SamplePair make_pair(const lang::Program& p, const minicc::Compiler& compiler,
                     Provenance provenance = Provenance::kRandom);

using KeySet = std::unordered_set<std::string>;
std::string seq_key(const TokenSeq& s);

// Ordered pairs without duplicate (high, low).
class Dataset {
 public:
  bool add(SamplePair p);  // false when already present
  bool contains(const SamplePair& p) const;
  bool contains_low(const TokenSeq& low) const;

  size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<SamplePair>& pairs() const { return pairs_; }
  size_t count(Provenance p) const;

  void shuffle(std::mt19937_64& rng);
  void truncate(size_t n);
  // Keeps pairs for which keep(pair) is true, in order.
  template <class Pred>
  void retain(Pred&& keep);

  KeySet low_keys() const;
  // Model examples: assembly in, source out.
  std::vector<nmt::Example> examples() const;

 private:
  void rebuild_keys();

  std::vector<SamplePair> pairs_;
  KeySet keys_;
  std::unordered_multiset<std::string> lows_;
};

template <class Pred>
void Dataset::retain(Pred&& keep) {
  std::vector<SamplePair> kept;
  kept.reserve(pairs_.size());
  for (auto& p : pairs_)
    if (keep(p)) kept.push_back(std::move(p));
  pairs_ = std::move(kept);
  rebuild_keys();
}

// Random programs compiled into pairs.
class PairGenerator {
 public:
  PairGenerator(lang::GrammarConfig grammar, const minicc::Compiler& compiler, uint64_t seed);

  SamplePair next();
  // Adds up to `count` pairs that are new to `into` and whose low side is not
  // in `exclude`. Returns how many were added; gives up after a bounded
  // number of draws when the grammar runs out of distinct programs.
  size_t add_fresh(Dataset& into, size_t count, const KeySet& exclude);

 private:
  lang::Sampler sampler_;
  const minicc::Compiler& compiler_;
};

// Distinct compiled programs whose canonical low side avoids `exclude`.
std::vector<minicc::AsmProgram> generate_inputs(const lang::GrammarConfig& grammar,
                                                const minicc::Compiler& compiler, size_t count,
                                                uint64_t seed, const KeySet& exclude = {});

class DatasetIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One {"high", "low", "provenance"} object per line, tokens space-joined.
void write_jsonl(const Dataset& d, const std::filesystem::path& path);
Dataset read_jsonl(const std::filesystem::path& path);

}  // namespace nmdec::driver
