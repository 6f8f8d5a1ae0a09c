#include "nmdec/cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "nmdec/canonical/digits.hpp"
#include "nmdec/lang/text.hpp"
#include "nmdec/rules/rules.hpp"

namespace nmdec::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

// Lines the parser keeps as directives: assembler directives and frame
// setup around the function body. Anything else is a typo.
bool is_known_directive(const std::string& raw) {
  static const std::set<std::string> kFrameOps = {"pushq", "popq", "movq", "subq", "addq", "leaq",
                                                  "ret",   "leave", "nop", "endbr64", "call"};
  std::string head = raw.substr(0, raw.find(' '));
  return (!head.empty() && head[0] == '.') || kFrameOps.count(head) > 0;
}

minicc::AsmProgram parse_snippet(const std::string& text) {
  minicc::AsmProgram raw = minicc::parse_asm(text);
  for (const auto& ins : raw.code)
    if (ins.op == minicc::Opcode::kDirective && !is_known_directive(ins.raw))
      throw InputError("unknown instruction '" + ins.raw + "'");
  minicc::AsmProgram cleaned = minicc::clean(raw);
  if (cleaned.code.empty()) throw InputError("no instructions");
  return cleaned;
}

ordered_json stats_json(const driver::IterationStats& s) {
  return {{"iteration", s.iteration},
          {"epochs", s.epochs},
          {"batches", s.batches},
          {"train_seconds", s.train_seconds},
          {"translate_seconds", s.translate_seconds},
          {"val_exact_match", s.val_exact_match},
          {"train_size", s.train_size},
          {"val_size", s.val_size},
          {"pending_before", s.pending_before},
          {"pending", s.pending},
          {"new_successes", s.new_successes},
          {"successes", s.successes},
          {"percent", s.percent},
          {"new_failures", s.new_failures},
          {"failed_parse", s.failed_parse},
          {"failed_structure", s.failed_structure},
          {"failed_fill", s.failed_fill},
          {"failed_timeout", s.failed_timeout}};
}

ordered_json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const ordered_json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

struct SuccessLine {
  std::string input;
  std::string decompiled;
};

std::vector<SuccessLine> read_successes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<SuccessLine> out;
  std::string line;
  for (size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      auto j = ordered_json::parse(line);
      out.push_back({j.at("input").get<std::string>(), j.at("decompiled").get<std::string>()});
    } catch (const ordered_json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

std::vector<minicc::AsmProgram> read_inputs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read inputs file " + path.string());
  std::vector<minicc::AsmProgram> out;
  std::string line;
  for (size_t lineno = 1; std::getline(in, line); ++lineno) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    try {
      out.push_back(parse_snippet(line));
    } catch (const std::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw InputError(path.string() + ": no inputs");
  return out;
}

int cmd_gen(const RunConfig& cfg, const fs::path& out, bool inputs, std::ostream& log) {
  minicc::MiniCompiler compiler(cfg.compiler);
  if (inputs) {
    auto programs = driver::generate_inputs(cfg.loop.grammar, compiler, cfg.count, cfg.loop.seed);
    std::string text;
    for (const auto& a : programs) text += minicc::format_asm(a) + "\n";
    write_text(out, text);
    log << "wrote " << programs.size() << " inputs to " << out.string() << "\n";
    return kExitOk;
  }
  driver::Dataset d;
  driver::PairGenerator gen(cfg.loop.grammar, compiler, cfg.loop.seed);
  size_t added = gen.add_fresh(d, cfg.count, {});
  if (added < cfg.count) log << "grammar exhausted after " << added << " distinct pairs\n";
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  driver::write_jsonl(d, out);
  log << "wrote " << d.size() << " pairs to " << out.string() << "\n";
  return kExitOk;
}

int cmd_run(const RunConfig& cfg, const fs::path& inputs_path, const fs::path& run_dir, std::ostream& log) {
  cfg.validate();
  auto inputs = read_inputs(inputs_path);
  minicc::MiniCompiler compiler(cfg.compiler);

  fs::create_directories(run_dir / "datasets");
  fs::create_directories(run_dir / "checkpoints");
  write_text(run_dir / "config.txt", cfg.to_text());
  {
    std::string text;
    for (const auto& a : inputs) text += minicc::format_asm(a) + "\n";
    write_text(run_dir / "inputs.txt", text);
  }

  ordered_json report = ordered_json::array();
  driver::LoopHooks hooks;
  hooks.on_iteration = [&](const driver::IterationStats& s, const nmt::Model& model, const driver::Dataset& train,
                           const driver::Dataset& val) {
    std::string n = std::to_string(s.iteration);
    if (s.iteration > 0) {
      driver::write_jsonl(train, run_dir / "datasets" / ("train-iter-" + n + ".jsonl"));
      driver::write_jsonl(val, run_dir / "datasets" / ("val-iter-" + n + ".jsonl"));
      model.save(run_dir / "checkpoints" / ("iter-" + n));
    }
    report.push_back(stats_json(s));
    write_text(run_dir / "report.json", report.dump(2) + "\n");
    log << "iteration " << s.iteration << ": " << s.successes << "/" << inputs.size() << " solved ("
        << s.percent << "%), " << s.new_successes << " new, val exact match " << s.val_exact_match << ", "
        << s.train_seconds << " s training\n";
  };

  driver::LoopResult result = driver::run_loop(inputs, compiler, cfg.loop, hooks);

  std::string text;
  for (const auto& s : result.successes) {
    ordered_json j = {{"input", minicc::format_asm(inputs[s.input])},
                      {"decompiled", lang::to_source(s.program)},
                      {"iteration", s.iteration}};
    text += j.dump() + "\n";
  }
  write_text(run_dir / "successes.jsonl", text);
  log << "stopped: " << driver::to_string(result.stop) << "\n";
  return result.stop == driver::StopReason::kThresholdMet ? kExitOk : kExitNoThreshold;
}

int cmd_decompile(const fs::path& checkpoint, const std::string& snippet, int beam, bool verbose,
                  const RunConfig& cfg, std::ostream& out) {
  nmt::Model model = nmt::Model::load(checkpoint);
  minicc::AsmProgram input;
  try {
    input = parse_snippet(snippet);
  } catch (const std::exception& e) {
    throw InputError(std::string("input: ") + e.what());
  }
  minicc::MiniCompiler compiler(cfg.compiler);
  driver::SolveOutcome o = driver::solve(model, input, compiler, beam, cfg.loop.fill);

  if (verbose) {
    out << "input:     " << minicc::format_asm(input) << "\n";
    out << "canonical: " << join(o.canonical.tokens) << "\n";
    for (size_t i = 0; i < o.hypotheses.size(); ++i) {
      const auto& h = o.hypotheses[i];
      out << "hypothesis " << i << " [" << h.score << "] " << join(h.tokens) << "\n";
      out << "  phase: " << driver::to_string(h.phase) << (h.duplicate ? " (duplicate)" : "") << "\n";
      if (h.program) out << "  template: " << lang::to_source(*h.program) << "\n";
      for (const auto& step : h.fill_trace) out << "  " << step << "\n";
    }
  }
  if (!o.solution) {
    out << "failed: " << driver::to_string(o.phase) << "\n";
    return kExitNoThreshold;
  }
  out << lang::to_source(*o.solution) << "\n";
  return kExitOk;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& dataset, int beam, const RunConfig& cfg,
             std::ostream& out) {
  nmt::Model model = nmt::Model::load(checkpoint);
  driver::Dataset d = driver::read_jsonl(dataset);
  if (d.empty()) throw InputError(dataset.string() + ": empty dataset");
  minicc::MiniCompiler compiler(cfg.compiler);

  std::map<std::string, size_t> phases;
  for (auto p : {driver::Phase::kSolved, driver::Phase::kParse, driver::Phase::kStructure, driver::Phase::kFill,
                 driver::Phase::kTimeout})
    phases[driver::to_string(p)] = 0;
  size_t solved = 0, exact = 0;
  auto t0 = Clock::now();
  for (const auto& pair : d.pairs()) {
    minicc::AsmProgram input = minicc::parse_asm_tokens(canonical::fuse_digits(pair.low));
    driver::SolveOutcome o = driver::solve(model, input, compiler, beam, cfg.loop.fill);
    ++phases[driver::to_string(o.phase)];
    if (o.solution) ++solved;
    if (!o.hypotheses.empty() && o.hypotheses[0].tokens == pair.high) ++exact;
  }
  double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  double n = static_cast<double>(d.size());

  ordered_json by_phase;
  for (const auto& [k, v] : phases) by_phase[k] = v;
  ordered_json report = {{"samples", d.size()},
                         {"successes", solved},
                         {"percent", 100.0 * solved / n},
                         {"exact_match", exact / n},
                         {"phases", by_phase},
                         {"seconds", seconds},
                         {"seconds_per_sample", seconds / n}};
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_eval_run(const fs::path& run_dir, std::ostream& out) {
  RunConfig cfg = resolve(read_settings(run_dir / "config.txt"), {});
  minicc::MiniCompiler compiler(cfg.compiler);
  auto inputs = read_inputs(run_dir / "inputs.txt");
  ordered_json report = read_json(run_dir / "report.json");
  if (!report.is_array() || report.empty()) throw InputError("report.json: expected a non-empty array");
  size_t reported = report.back().at("successes").get<size_t>();
  double reported_percent = report.back().at("percent").get<double>();

  std::map<std::string, size_t> index;
  for (size_t i = 0; i < inputs.size(); ++i) index.emplace(minicc::format_asm(inputs[i]), i);
  size_t verified = 0;
  std::set<size_t> seen;
  for (const auto& s : read_successes(run_dir / "successes.jsonl")) {
    auto it = index.find(minicc::format_asm(parse_snippet(s.input)));
    if (it == index.end() || !seen.insert(it->second).second) continue;
    lang::Program p;
    try {
      p = lang::parse_source(s.decompiled);
    } catch (const lang::ParseError&) {
      continue;
    }
    if (driver::verify_success(p, inputs[it->second], compiler)) ++verified;
  }
  double percent = 100.0 * static_cast<double>(verified) / static_cast<double>(inputs.size());
  bool match = verified == reported;
  ordered_json j = {{"inputs", inputs.size()},
                    {"verified", verified},
                    {"percent", percent},
                    {"reported", reported},
                    {"reported_percent", reported_percent},
                    {"match", match}};
  out << j.dump(2) << "\n";
  return match ? kExitOk : kExitNoThreshold;
}

int cmd_extract_rules(const fs::path& successes, const fs::path& out, const RunConfig& cfg, std::ostream& log) {
  minicc::MiniCompiler compiler(cfg.compiler);
  std::vector<rules::SuccessPair> pairs;
  for (const auto& s : read_successes(successes)) {
    try {
      pairs.emplace_back(parse_snippet(s.input), lang::parse_source(s.decompiled));
    } catch (const std::exception& e) {
      throw InputError(successes.string() + ": " + e.what());
    }
  }
  rules::Extraction e = rules::extract_rules(pairs, compiler);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  rules::write_jsonl(e.rules, out);
  log << "extracted " << e.rules.size() << " rules from " << pairs.size() << " successes (" << e.skipped
      << " skipped)\n";
  return kExitOk;
}

}  // namespace nmdec::cli
