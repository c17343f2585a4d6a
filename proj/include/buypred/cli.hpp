#pragma once

#include <string>
#include <vector>

namespace buypred {

// Runs the full CLI (subcommands: split, train, predict, score, synth,
// stats). Returns the process exit code; errors print one machine-parseable
// `error: <kind>: <detail>` line on stderr and return nonzero.
int run_cli(const std::vector<std::string>& args);

}  // namespace buypred
