// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_CLI_HPP
#define LEAFWOOD_CLI_HPP

#include <string>
#include <vector>

namespace leafwood::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `leafwood` executable. Returns the process exit code.
int run(int argc, const char* const* argv);

/// Same, with argv[0] omitted.
int run(const std::vector<std::string>& args);

}  // namespace leafwood::cli

#endif  // LEAFWOOD_CLI_HPP
