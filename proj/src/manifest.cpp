#include "rrl/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "rrl/error.hpp"

namespace rrl {

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::ordered_json doc;
    doc["tool"] = "rrl";
    doc["tool_version"] = manifest.tool_version;
    doc["subcommand"] = manifest.subcommand;
    doc["flags"] = manifest.flags;
    doc["inputs"] = manifest.inputs;
    doc["outputs"] = manifest.outputs;
    doc["seeds"] = manifest.seeds;
    doc["wall_seconds"] = manifest.wall_seconds;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write run manifest: " + path);
    out << doc.dump(2) << '\n';
}

}  // namespace rrl
