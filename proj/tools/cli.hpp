#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bstc::cli {

/// Runs one subcommand (fit, simulate, summarize, metrics, explore).
/// Returns 0 on success, 1 on invalid input, 2 on numerical failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bstc::cli
