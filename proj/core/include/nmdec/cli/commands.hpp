#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmdec/cli/config.hpp"
#include "nmdec/minicc/asm.hpp"

namespace nmdec::cli {

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitNoThreshold = 3 };

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs `body`, mapping configuration errors to 1 and I/O or input errors
// to 2, with the message written to `err`.
int guarded(std::ostream& err, const std::function<int()>& body);

// One assembly snippet per line; blank lines and lines starting with '#'
// are skipped. Throws InputError naming the line.
std::vector<minicc::AsmProgram> read_inputs(const std::filesystem::path& path);

// Writes `count` distinct random pairs as JSONL, or with `inputs` set,
// `count` compiled snippets one per line.
int cmd_gen(const RunConfig& cfg, const std::filesystem::path& out, bool inputs, std::ostream& log);

// Full decompilation loop over the snippets in `inputs`, writing the run
// directory. Exit 0 iff the success threshold was met.
int cmd_run(const RunConfig& cfg, const std::filesystem::path& inputs, const std::filesystem::path& run_dir,
            std::ostream& log);

// Decompiles one snippet with a checkpoint. Prints the final program; with
// `verbose`, also the canonical input, hypotheses, template and repairs.
int cmd_decompile(const std::filesystem::path& checkpoint, const std::string& snippet, int beam, bool verbose,
                  const RunConfig& cfg, std::ostream& out);

// Solves every low side of a JSONL dataset and prints a JSON report.
int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset, int beam,
             const RunConfig& cfg, std::ostream& out);

// Re-verifies a run directory's successes against its inputs and compares
// the count with report.json.
int cmd_eval_run(const std::filesystem::path& run_dir, std::ostream& out);

int cmd_extract_rules(const std::filesystem::path& successes, const std::filesystem::path& out,
                      const RunConfig& cfg, std::ostream& log);

}  // namespace nmdec::cli
