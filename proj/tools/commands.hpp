// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace t2seg::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kDiverged = 3,
};

/// Parses and executes one subcommand. args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace t2seg::cli
