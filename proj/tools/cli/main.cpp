// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "dispatch.hpp"

int main(int argc, char** argv) {
  return btk::cli::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
