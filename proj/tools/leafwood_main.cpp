// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/cli.hpp"

int main(int argc, char** argv) { return leafwood::cli::run(argc, argv); }
