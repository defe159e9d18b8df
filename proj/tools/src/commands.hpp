#pragma once

#include "config.hpp"
#include "output.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace epicli {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> replicates;
  int threads = 1;
  std::filesystem::path base_dir = ".";  // data paths are relative to the config file
};

const std::vector<std::string>& command_names();

// Runs one subcommand on an already parsed config and returns the artifacts
// without touching the filesystem (except to read data files).
Artifacts run_command(const std::string& command, const json& config, const Overrides& o);

// Named presets for `reproduce`: one or more (command, config) pairs.
std::vector<std::pair<std::string, json>> preset(const std::string& id);
const std::vector<std::string>& preset_ids();

// Full command-line entry point; returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace epicli
