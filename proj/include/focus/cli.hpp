#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace focus::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand. Exit codes: 0 success, 1 validation or usage error,
/// 2 I/O or file-format error.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace focus::cli
