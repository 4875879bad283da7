#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace qpe::cli {

inline constexpr const char* version = "1.0.0";

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numerical = 3;

//! Runs one subcommand. The JSON summary goes to `out`, error JSON to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::uint64_t fnv1a64(std::string_view bytes);

} // namespace qpe::cli
