// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace btk::cli {

enum ExitCode : int { kOk = 0, kFailed = 1, kMalformed = 2 };

/// argv[0] is the program name. Machine output goes to `out` (or --out
/// files), diagnostics to `err`.
int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace btk::cli
