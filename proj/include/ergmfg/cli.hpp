#pragma once

#include <cstdint>
#include <string>

namespace ergmfg {

inline constexpr const char* kVersion = "0.1.0";

/// Front-door request: one batch command against one config file.
struct RunManifest {
  std::string config_path;
  std::string out_dir = ".";
  std::string command;  // solve-nonlocal | solve-local | hjb | kfp | sweep | particles | uniqueness
  std::uint64_t seed = 1;
  std::string log_level = "info";
  std::string run_a, run_b;  // prior run directories for `uniqueness`
};

/// Executes the command and writes artifacts into out_dir. Returns the
/// process exit status: 0 when every pass flag holds, 1 when a run completed
/// with failing flags, 2 on solver non-convergence, 3 on configuration
/// errors.
int run(const RunManifest& manifest);

}  // namespace ergmfg
