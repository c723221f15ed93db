#pragma once

#include <string>
#include <vector>

namespace llmrel::cli {

/// Runs the command-line tool. Diagnostics go to stderr, data to files under
/// --out. Returns the process exit status.
int run(const std::vector<std::string>& args);

}  // namespace llmrel::cli
