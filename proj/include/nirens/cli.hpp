#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nirens/config.hpp"
#include "nirens/synthgen.hpp"

namespace nirens {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

/// Runs `nirens <command> ...`; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Generator settings from the `synth.*` keys. Band lists use
/// "center:width:amplitude" items separated by ';'.
GenConfig gen_config_from(const Config& cfg);

}  // namespace nirens
