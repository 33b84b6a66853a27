// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#pragma once

namespace felab::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// `felab <mode> --config <path> [--seed N] [--out DIR]`. Returns the
/// process exit code; errors are reported on stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace felab::app
