#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "foldsimplex/error.hpp"

namespace foldsimplex {

inline constexpr const char* library_version = "0.1.0";

/// Exit status of the command-line tool for each error class (0 is success).
int exit_code(ErrorKind kind);

inline constexpr int exit_usage = 64;
/// Report written, but an internal check (EM convergence) failed.
inline constexpr int exit_check_failed = 3;

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::string& path);

/// Runs the tool on argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace foldsimplex
