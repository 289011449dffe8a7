#pragma once

#include "hifloc/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hifloc::harness {

/// Process exit status for an error category: usage 2, simulation 3,
/// training 4, I/O 5.
int exit_code(ErrorCategory category);

/// `args` excludes the program name. Diagnostics go to `err`, everything
/// else to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hifloc::harness
