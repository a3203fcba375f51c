#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace idl {

inline constexpr const char* kToolVersion = "0.1.0";

/// Run provenance: command line, merged config, seeds, and a digest of every
/// file the command produced. Re-running with the recorded flags and seeds
/// reproduces the same digests.
struct RunManifest {
    std::string command_line;
    std::string config_json;  // effective merged config
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::vector<std::filesystem::path> outputs;

    /// digests every listed output and writes manifest.json under dir
    void write(const std::filesystem::path& dir) const;
};

}  // namespace idl
