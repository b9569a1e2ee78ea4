// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include "commands.hpp"

int main(int argc, char** argv) {
  return t2seg::cli::run(std::vector<std::string>(argv, argv + argc));
}
