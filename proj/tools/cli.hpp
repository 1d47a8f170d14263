#pragma once

#include <string>
#include <vector>

namespace acgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

/// Environment variable naming the directory that holds experiment folders.
inline constexpr const char* kArtifactRootEnv = "ACGAN_ARTIFACT_ROOT";

/// Entry point shared by the binary and the tests; args[0] is the program name.
int run_command(const std::vector<std::string>& args);

}  // namespace acgan::cli
