#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace harm::cli {

inline constexpr std::string_view kVersion = "1.0.0";

// Runs one harmctl invocation; args excludes the program name. Errors are
// written to `err` as a JSON object and mapped onto the exit-code contract.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace harm::cli
