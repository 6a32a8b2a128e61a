// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(cmerw_cli::main_with_args(std::env::args().collect()));
}
