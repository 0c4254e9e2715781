#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace heatlaw::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCap = 3;
inline constexpr int kExitInconclusive = 4;

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

const std::vector<std::string>& command_names();

// runs one subcommand; errors are reported on stderr and mapped to exit codes
int run(const std::string& command, const RunOptions& opt);

}  // namespace heatlaw::app
