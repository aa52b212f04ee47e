#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rrl {

inline constexpr const char* kToolVersion = "1.0.0";

// Provenance record written next to every output artifact. The recorded
// subcommand, flags and seeds are sufficient to regenerate the artifact
// bit-exactly (all randomness is seed-driven).
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> flags;  // resolved values, as text
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, std::uint64_t> seeds;
    std::string tool_version = kToolVersion;
    double wall_seconds = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace rrl
