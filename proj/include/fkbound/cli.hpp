#pragma once

// Command-line front end. Every run emits {"command", "config", "result"};
// the config block alone (or the whole report) can be passed back through
// --spec to repeat the run.

#include <iosfwd>
#include <string>
#include <vector>

#include "fkbound/io.hpp"

namespace fkbound::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2, kNumerical = 3, kVerification = 4 };

struct Outcome {
  io::json result;
  io::json table;  // rows for --format csv; null falls back to flattened output
  bool verified = true;
  std::string failure;
};

/// Fills unset keys of `config` with the command's defaults.
io::json with_defaults(const std::string& command, io::json config);

/// Runs one command on a complete config. Throws the library errors.
Outcome execute(const std::string& command, const io::json& config);

/// `args` excludes the program name. Reports go to `out` (or the --out
/// file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fkbound::cli
