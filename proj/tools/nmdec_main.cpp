#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nmdec/cli/commands.hpp"

namespace cli = nmdec::cli;

namespace {

struct GlobalFlags {
  std::string config;
  std::string preset;
  std::vector<std::string> sets;
  std::optional<std::string> seed, threads, beam, iteration_limit, level, count;
};

cli::Settings flag_settings(const GlobalFlags& g) {
  cli::Settings out;
  if (!g.preset.empty()) out.emplace_back("preset", g.preset);
  for (const auto& s : g.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw cli::ConfigError("--set expects key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  const std::pair<const char*, const std::optional<std::string>*> named[] = {
      {"seed", &g.seed},   {"threads", &g.threads}, {"beam", &g.beam}, {"iteration_limit", &g.iteration_limit},
      {"level", &g.level}, {"count", &g.count}};
  for (const auto& [key, value] : named)
    if (*value) out.emplace_back(key, **value);
  return out;
}

cli::RunConfig load_config(const GlobalFlags& g) {
  cli::Settings file;
  if (!g.config.empty()) file = cli::read_settings(g.config);
  return cli::resolve(file, flag_settings(g));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nmdec: iterative neural decompiler"};
  app.require_subcommand(1);

  GlobalFlags g;
  auto last_wins = [&app](const char* name, auto& into, const char* help) {
    app.add_option(name, into, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };
  last_wins("--config", g.config, "Settings file with key = value lines");
  last_wins("--preset", g.preset, "desk or paper");
  app.add_option("--set", g.sets, "Override a setting, key=value (repeatable)");
  last_wins("--seed", g.seed, "Random seed");
  last_wins("--threads", g.threads, "Worker threads");
  last_wins("--beam", g.beam, "Beam width");
  last_wins("--iteration-limit", g.iteration_limit, "Maximum loop iterations, or none");
  last_wins("--level", g.level, "Grammar level 1-8");
  last_wins("--count", g.count, "Pairs or inputs written by gen");

  std::string out_path, inputs_path, run_dir, checkpoint, snippet, dataset, successes;
  bool gen_inputs = false, verbose = false;

  auto* gen = app.add_subcommand("gen", "Write random training pairs as JSONL");
  gen->add_option("out", out_path, "Output file")->required();
  gen->add_flag("--inputs", gen_inputs, "Write compiled snippets, one per line, instead of pairs");

  auto* run = app.add_subcommand("run", "Run the decompilation loop over a file of snippets");
  run->add_option("inputs", inputs_path, "Assembly snippets, one per line")->required();
  run->add_option("run_dir", run_dir, "Output directory")->required();

  auto* decompile = app.add_subcommand("decompile", "Decompile one snippet with a checkpoint");
  decompile->add_option("checkpoint", checkpoint)->required();
  decompile->add_option("snippet", snippet, "Assembly text")->required();
  decompile->add_flag("--verbose,-v", verbose, "Show every phase");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset, or re-verify a run directory");
  auto* eval_ckpt = eval->add_option("checkpoint", checkpoint);
  eval->add_option("dataset", dataset);
  auto* eval_run = eval->add_option("--run", run_dir, "Run directory to re-verify");
  eval_run->excludes(eval_ckpt);

  auto* extract = app.add_subcommand("extract-rules", "Turn verified successes into rules");
  extract->add_option("successes", successes, "successes.jsonl from a run")->required();
  extract->add_option("out", out_path, "rules.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  return cli::guarded(std::cerr, [&]() -> int {
    if (eval->parsed() && !run_dir.empty()) return cli::cmd_eval_run(run_dir, std::cout);
    cli::RunConfig cfg = load_config(g);
    if (gen->parsed()) return cli::cmd_gen(cfg, out_path, gen_inputs, std::cerr);
    if (run->parsed()) return cli::cmd_run(cfg, inputs_path, run_dir, std::cerr);
    if (decompile->parsed())
      return cli::cmd_decompile(checkpoint, snippet, cfg.loop.beam, verbose, cfg, std::cout);
    if (eval->parsed()) {
      if (checkpoint.empty() || dataset.empty())
        throw cli::ConfigError("eval needs a checkpoint and a dataset, or --run");
      return cli::cmd_eval(checkpoint, dataset, cfg.loop.beam, cfg, std::cout);
    }
    return cli::cmd_extract_rules(successes, out_path, cfg, std::cerr);
  });
}
