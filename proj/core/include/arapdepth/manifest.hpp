#pragma once

#include <map>
#include <string>
#include <vector>

#include "arapdepth/config.hpp"

namespace arapdepth {

/// Lower-case hex SHA-256 of a file's contents.
std::string file_sha256(const std::string& path);

/// Reproducibility record written next to every run's outputs: the command,
/// its arguments, the full configuration, and checksums of inputs and
/// outputs (outputs by file name only, so reruns into another directory
/// produce the same manifest).
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> arguments;
  RunConfig config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write(const std::string& path) const;
};

}  // namespace arapdepth
