#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rfadex::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, internal_error = 3 };

// `rfadex <generate|train|attack|detect|report> [flags]`. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace rfadex::cli
