// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/cli/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace vice::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitJobFailed = 2;

/// Entry point of the `vice` tool; `args` excludes the program name.
/// Subcommands: evaluate, ite, correlate, check-backends.
/// Exit codes: 0 success, 1 usage or input error, 2 when a job failed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Env& env = process_env());

} // namespace vice::cli
