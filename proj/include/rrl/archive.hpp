#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rrl/labelmap.hpp"
#include "rrl/synthgen.hpp"

namespace rrl {

// One row of manifest.tsv: id <TAB> lmap_path <TAB> img_path, paths
// relative to the manifest's directory.
struct ArchiveEntry {
    std::string id;
    std::string lmap_path;
    std::string img_path;
};

std::vector<ArchiveEntry> read_archive_manifest(const std::string& path);

struct LoadedArchive {
    int channels = 0;
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> images;
    std::vector<LabelMap> maps;
};

// Loads every archive entry (or only `subset` ids when given) and checks
// that shapes and class counts agree across the archive.
LoadedArchive load_archive(const std::string& dir,
                           const std::optional<std::vector<std::string>>& subset = std::nullopt);

// Writes NNNNN.lmap / NNNNN.img pairs plus manifest.tsv into `dir`
// (created if missing).
void write_archive(const std::string& dir, const std::vector<SynthImage>& archive, int channels);

std::vector<std::string> read_id_file(const std::string& path);

}  // namespace rrl
