#include "nmdec/driver/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nmdec/canonical/pipeline.hpp"

namespace nmdec::driver {

namespace {

std::string pair_key(const SamplePair& p) { return seq_key(p.high) + '\n' + seq_key(p.low); }

size_t draw_limit(size_t count) { return 50 * count + 1000; }

}  // namespace

const char* to_string(Provenance p) {
  return p == Provenance::kRandom ? "random" : "failed-translation";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "random") return Provenance::kRandom;
  if (s == "failed-translation") return Provenance::kFailedTranslation;
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

SamplePair make_pair(const lang::Program& p, const minicc::Compiler& compiler, Provenance provenance) {
  canonical::CanonicalPair c = canonical::canonicalize_pair(p, compiler.compile(p));
  return {std::move(c.high), std::move(c.low), provenance};
}

std::string seq_key(const TokenSeq& s) { return join(s); }

bool Dataset::add(SamplePair p) {
  if (!keys_.insert(pair_key(p)).second) return false;
  lows_.insert(seq_key(p.low));
  pairs_.push_back(std::move(p));
  return true;
}

bool Dataset::contains(const SamplePair& p) const { return keys_.count(pair_key(p)) > 0; }

bool Dataset::contains_low(const TokenSeq& low) const { return lows_.count(seq_key(low)) > 0; }

size_t Dataset::count(Provenance p) const {
  return static_cast<size_t>(
      std::count_if(pairs_.begin(), pairs_.end(), [&](const SamplePair& s) { return s.provenance == p; }));
}

void Dataset::shuffle(std::mt19937_64& rng) { std::shuffle(pairs_.begin(), pairs_.end(), rng); }

void Dataset::truncate(size_t n) {
  if (n >= pairs_.size()) return;
  pairs_.resize(n);
  rebuild_keys();
}

KeySet Dataset::low_keys() const { return KeySet(lows_.begin(), lows_.end()); }

std::vector<nmt::Example> Dataset::examples() const {
  std::vector<nmt::Example> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back({p.low, p.high});
  return out;
}

void Dataset::rebuild_keys() {
  keys_.clear();
  lows_.clear();
  for (const auto& p : pairs_) {
    keys_.insert(pair_key(p));
    lows_.insert(seq_key(p.low));
  }
}

PairGenerator::PairGenerator(lang::GrammarConfig grammar, const minicc::Compiler& compiler, uint64_t seed)
    : sampler_(grammar, seed), compiler_(compiler) {}

SamplePair PairGenerator::next() { return make_pair(sampler_.sample(), compiler_, Provenance::kRandom); }

size_t PairGenerator::add_fresh(Dataset& into, size_t count, const KeySet& exclude) {
  size_t added = 0;
  for (size_t draws = 0; added < count && draws < draw_limit(count); ++draws) {
    SamplePair p = next();
    if (exclude.count(seq_key(p.low))) continue;
    if (into.add(std::move(p))) ++added;
  }
  return added;
}

std::vector<minicc::AsmProgram> generate_inputs(const lang::GrammarConfig& grammar,
                                                const minicc::Compiler& compiler, size_t count,
                                                uint64_t seed, const KeySet& exclude) {
  lang::Sampler sampler(grammar, seed);
  KeySet seen;
  std::vector<minicc::AsmProgram> out;
  for (size_t draws = 0; out.size() < count && draws < draw_limit(count); ++draws) {
    minicc::AsmProgram a = compiler.compile(sampler.sample());
    std::string key = seq_key(canonical::canonicalize_input(a).tokens);
    if (exclude.count(key) || !seen.insert(key).second) continue;
    out.push_back(std::move(a));
  }
  return out;
}

void write_jsonl(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetIoError("cannot write " + path.string());
  for (const auto& p : d.pairs()) {
    nlohmann::ordered_json j;
    j["high"] = join(p.high);
    j["low"] = join(p.low);
    j["provenance"] = to_string(p.provenance);
    out << j.dump() << '\n';
  }
  if (!out) throw DatasetIoError("write failed: " + path.string());
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetIoError("cannot read " + path.string());
  Dataset d;
  std::string line;
  for (size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      SamplePair p{split_ws(j.at("high").get<std::string>()), split_ws(j.at("low").get<std::string>()),
                   Provenance::kRandom};
      if (j.contains("provenance")) p.provenance = parse_provenance(j.at("provenance").get<std::string>());
      d.add(std::move(p));
    } catch (const std::exception& e) {
      throw DatasetIoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return d;
}

}  // namespace nmdec::driver
