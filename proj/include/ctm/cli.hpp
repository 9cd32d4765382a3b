#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ctm::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSeedEnvVar = "CTM_SEED";

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kNumericError = 2,
  kNotConverged = 3,
};

/// Runs one command line (args[0] is the subcommand, no program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "key = value" lines; '#' starts a comment. Throws io::InputError with the
/// line number on malformed lines or repeated keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// The argument vector recorded in a manifest written by run().
std::vector<std::string> manifest_args(const std::string& manifest_text);

}  // namespace ctm::cli
