#include <gtest/gtest.h>

#include <random>

#include "nmdec/lang/grammar.hpp"
#include "nmdec/lang/text.hpp"
#include "nmdec/minicc/compiler.hpp"
#include "nmdec/minicc/magic.hpp"
#include "nmdec/minicc/vm.hpp"
#include "nmdec/templatefill/templatefill.hpp"

namespace nmdec::templatefill {
namespace {

using pdg::NodeKind;

const minicc::MiniCompiler kCompiler;

pdg::Pdg pdg_of(const std::string& src) { return pdg::build_pdg(kCompiler.compile(lang::parse_source(src)), kCompiler); }

std::vector<Mismatch> mismatches_between(const std::string& tmpl, const std::string& input) {
  pdg::Pdg r = pdg_of(tmpl), i = pdg_of(input);
  auto iso = pdg::find_isomorphism(r, i);
  EXPECT_TRUE(iso);
  return iso ? find_mismatches(*iso, i, r) : std::vector<Mismatch>{};
}

FillResult fill_source(const std::string& tmpl, const std::string& input) {
  return fill(Template::from_program(lang::parse_source(tmpl)), kCompiler.compile(lang::parse_source(input)),
              kCompiler);
}

bool exact_match(const lang::Program& p, const minicc::AsmProgram& input) {
  auto a = pdg::build_pdg(kCompiler.compile(p), kCompiler);
  auto b = pdg::build_pdg(input, kCompiler);
  auto iso = pdg::find_isomorphism(a, b, {pdg::MatchMode::kExact});
  return iso && pdg::verify_isomorphism(a, b, *iso, pdg::MatchMode::kExact) && find_mismatches(*iso, b, a).empty();
}

TEST(Mismatches, IdenticalGraphsHaveNone) {
  EXPECT_TRUE(mismatches_between("X2 = X1 * 3 + 5;", "X2 = X1 * 3 + 5;").empty());
}

TEST(Mismatches, ShiftAmountFromWorkedExample) {
  auto mm = mismatches_between("X0 = (14 + X1) * 2;", "X0 = (14 + X1) * 4;");
  ASSERT_EQ(mm.size(), 1u);
  EXPECT_EQ(mm[0].current, 1);
  EXPECT_EQ(mm[0].target, 2);
}

TEST(Probe, SingleConstantMapsToItsImmediate) {
  CompileBudget budget;
  auto t = Template::from_program(lang::parse_source("X0 = 7;"));
  InfluenceMap inf = probe_influence(t, kCompiler, budget);
  ASSERT_EQ(inf.slots.count(0), 1u);
  const auto& changes = inf.slots.at(0).changes;
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes.begin()->second.before, 7);
  EXPECT_EQ(changes.begin()->second.after, 8);
}

TEST(Probe, PowerOfTwoRetriesWithNextPower) {
  CompileBudget budget;
  auto t = Template::from_program(lang::parse_source("X2 = X1 * 8;"));
  InfluenceMap inf = probe_influence(t, kCompiler, budget);
  ASSERT_EQ(inf.slots.count(0), 1u);
  EXPECT_EQ(inf.slots.at(0).probe, 16);
  ASSERT_EQ(inf.slots.at(0).changes.size(), 1u);
  EXPECT_EQ(inf.slots.at(0).changes.begin()->second.before, 3);
  EXPECT_EQ(inf.slots.at(0).changes.begin()->second.after, 4);
  EXPECT_TRUE(inf.rigid.empty());
}

int const_feeding(const pdg::Pdg& g, const std::string& label) {
  for (const auto& e : g.data) {
    if (g.nodes[static_cast<size_t>(e.from)].kind == NodeKind::kConst &&
        g.nodes[static_cast<size_t>(e.to)].label == label) {
      return e.from;
    }
  }
  return -1;
}

bool contains(const std::vector<Candidate>& cs, int32_t v) {
  return std::any_of(cs.begin(), cs.end(), [&](const Candidate& c) { return c.value == v; });
}

TEST(Candidates, ShiftAmountTwoSuggestsFour) {
  pdg::Pdg in = pdg_of("X0 = (14 + X1) * 4;");
  int node = const_feeding(in, "sall");
  ASSERT_GE(node, 0);
  auto cs = invert_candidates({0, node, 1, 2}, in);
  EXPECT_TRUE(contains(cs, 4));
  EXPECT_EQ(cs.front().pattern, Pattern::kIdentity);
}

TEST(Candidates, CompareConstantSuggestsOffsets) {
  pdg::Pdg in = pdg_of("if (X0 > 4) { X1 = 1; }");
  int node = const_feeding(in, "cmpl");
  ASSERT_GE(node, 0);
  auto cs = invert_candidates({0, node, 7, 4}, in);
  EXPECT_TRUE(contains(cs, 5));
  EXPECT_TRUE(contains(cs, 3));
}

TEST(Candidates, MagicMultiplierRecoversDivisor) {
  pdg::Pdg in = pdg_of("X0 = X1 / 3;");
  int node = const_feeding(in, "imull/1");
  ASSERT_GE(node, 0);
  EXPECT_EQ(in.nodes[static_cast<size_t>(node)].value, 1431655766);
  auto cs = invert_candidates({0, node, 0, 1431655766}, in);
  EXPECT_TRUE(contains(cs, 3));
}

TEST(Candidates, MagicInversionSoundForSmallDivisors) {
  for (int d = 3; d <= 100; ++d) {
    auto m = minicc::signed_magic(d);
    EXPECT_EQ(minicc::divisor_from_magic(m.multiplier, m.shift), d);
    if (minicc::is_power_of_two(d)) continue;
    pdg::Pdg in = pdg_of("X0 = X1 / " + std::to_string(d) + ";");
    int node = const_feeding(in, "imull/1");
    ASSERT_GE(node, 0) << d;
    auto cs = invert_candidates({0, node, 0, m.multiplier}, in);
    EXPECT_TRUE(contains(cs, d)) << d;
  }
}

TEST(Candidates, CappedAndDistinct) {
  pdg::Pdg in = pdg_of("if (X0 > 4) { X1 = 1; }");
  SlotInfluence probe{8, {{0, {7, 8}}}};
  auto cs = invert_candidates({0, const_feeding(in, "cmpl"), 7, 4}, in, 7, &probe);
  EXPECT_LE(cs.size(), kMaxCandidates);
  for (size_t i = 0; i < cs.size(); ++i) {
    for (size_t j = i + 1; j < cs.size(); ++j) EXPECT_NE(cs[i].value, cs[j].value);
  }
}

TEST(Fill, WorkedExampleReplacesTwoWithFour) {
  FillResult r = fill_source("X0 = (14 + X1) * 2;", "X0 = (14 + X1) * 4;");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(lang::to_source(*r.program), lang::to_source(lang::parse_source("X0 = (14 + X1) * 4;")));
  EXPECT_LE(r.compiles, 64);
}

TEST(Fill, NoMismatchReturnsTemplate) {
  FillResult r = fill_source("X0 = (14 + X1) * 4;", "X0 = (14 + X1) * 4;");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.compiles, 1);
  EXPECT_TRUE(r.trace.empty());
}

TEST(Fill, ConditionAndDivisor) {
  FillResult r = fill_source("if (X0 >= 9) { X1 = X2 / 5; }", "if (X0 >= 12) { X1 = X2 / 9; }");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(lang::number_values(*r.program), (std::vector<int32_t>{12, 9}));
}

TEST(Fill, VariableNamesFollowTheInput) {
  FillResult r = fill_source("X5 = X4 + 3;", "X0 = X1 + 3;");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(lang::to_source(*r.program), lang::to_source(lang::parse_source("X0 = X1 + 3;")));
}

TEST(Fill, ConstantFoldingIsNotInverted) {
  FillResult r = fill_source("X3 = (X1 * 43) * 70;", "X3 = 63 * (5 * X1);");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.failure.reason, FillFailure::Reason::kUnresolved);
  ASSERT_EQ(r.failure.unresolved.size(), 1u);
  EXPECT_EQ(r.failure.unresolved[0].target, 315);
}

TEST(Fill, DifferentStructureIsRejected) {
  FillResult r = fill_source("X0 = X1 + 3;", "X0 = X1 - 3;");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.failure.reason, FillFailure::Reason::kNotIsomorphic);
}

// Templates from random programs with some constants scrambled.
TEST(Fill, RandomTemplatesVerifyAndAgreeSemantically) {
  lang::GrammarConfig cfg;
  lang::Sampler sampler(cfg, 5);
  std::mt19937 rng(5);
  std::uniform_int_distribution<int32_t> value(-100, 100);
  int attempted = 0, solved = 0;
  for (int t = 0; t < 300; ++t) {
    lang::Program p = sampler.sample();
    lang::Program tmpl = p;
    for (int32_t* slot : lang::number_slots(tmpl)) {
      if (rng() % 2) *slot = 1 + static_cast<int32_t>(rng() % 100);
    }
    minicc::AsmProgram input = kCompiler.compile(p);
    FillResult r = fill(Template::from_program(tmpl), input, kCompiler);
    EXPECT_LE(r.compiles, 64);
    if (!r.ok() && r.failure.reason == FillFailure::Reason::kNotIsomorphic) continue;
    ++attempted;
    if (!r.ok()) continue;
    ++solved;
    ASSERT_TRUE(exact_match(*r.program, input)) << lang::to_source(*r.program);
    for (int k = 0; k < 10; ++k) {
      minicc::Store s;
      for (const auto& v : lang::variable_pool(cfg)) s[v] = value(rng);
      try {
        EXPECT_EQ(minicc::interpret_source(*r.program, s), minicc::run_vm(input, s))
            << lang::to_source(p) << " vs " << lang::to_source(*r.program);
      } catch (const minicc::FuelExhausted&) {
      }
    }
  }
  EXPECT_GT(attempted, 100);
  EXPECT_GT(solved * 10, attempted * 8) << solved << "/" << attempted;
}

TEST(Fill, ProbedSlotsKeepStructure) {
  lang::GrammarConfig cfg;
  lang::Sampler sampler(cfg, 6);
  for (int t = 0; t < 100; ++t) {
    auto tmpl = Template::from_program(sampler.sample());
    CompileBudget budget{1000, 0};
    InfluenceMap inf = probe_influence(tmpl, kCompiler, budget);
    pdg::Pdg base = pdg::build_pdg(kCompiler.compile(tmpl.program), kCompiler);
    for (const auto& [slot, si] : inf.slots) {
      EXPECT_FALSE(inf.rigid.count(slot));
      lang::Program probed = tmpl.program;
      *lang::number_slots(probed)[static_cast<size_t>(slot)] = si.probe;
      pdg::Pdg g = pdg::build_pdg(kCompiler.compile(probed), kCompiler);
      EXPECT_TRUE(pdg::find_isomorphism(base, g)) << lang::to_source(tmpl.program);
    }
  }
}

}  // namespace
}  // namespace nmdec::templatefill
