#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mpclab {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes: 0 success, 1 runtime error (bad values, unwritable paths),
/// 2 usage error. Diagnostics go to `err`; data written to standard output by
/// single-shot commands goes to `out`. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace mpclab
