#include "rrl/archive.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "rrl/error.hpp"
#include "rrl/textio.hpp"

namespace fs = std::filesystem;

namespace rrl {

std::vector<ArchiveEntry> read_archive_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open archive manifest: " + path);
    std::vector<ArchiveEntry> entries;
    std::string line;
    int line_no = 0;
    while (read_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ArchiveEntry e;
        auto first_tab = line.find('\t');
        auto second_tab = first_tab == std::string::npos ? std::string::npos
                                                         : line.find('\t', first_tab + 1);
        if (first_tab == std::string::npos || second_tab == std::string::npos)
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ": expected 'id<TAB>lmap_path<TAB>img_path'");
        e.id = line.substr(0, first_tab);
        e.lmap_path = line.substr(first_tab + 1, second_tab - first_tab - 1);
        e.img_path = line.substr(second_tab + 1);
        if (e.id.empty() || e.lmap_path.empty() || e.img_path.empty())
            throw DataError(path + ": line " + std::to_string(line_no) + ": empty field");
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw DataError(path + ": archive manifest lists no images");
    return entries;
}

LoadedArchive load_archive(const std::string& dir,
                           const std::optional<std::vector<std::string>>& subset) {
    const fs::path base(dir);
    auto entries = read_archive_manifest((base / "manifest.tsv").string());

    std::optional<std::unordered_set<std::string>> wanted;
    if (subset) wanted.emplace(subset->begin(), subset->end());

    LoadedArchive archive;
    for (const auto& e : entries) {
        if (wanted && !wanted->count(e.id)) continue;
        LabelMap map = load_label_map_file((base / e.lmap_path).string());
        ImageData img = read_image_file((base / e.img_path).string());
        if (img.height != map.height || img.width != map.width)
            throw DataError("image and label map sizes differ for id " + e.id);
        if (archive.ids.empty()) {
            archive.channels = img.channels;
            archive.height = img.height;
            archive.width = img.width;
            archive.num_classes = map.num_classes;
        } else if (img.channels != archive.channels || img.height != archive.height ||
                   img.width != archive.width || map.num_classes != archive.num_classes) {
            throw DataError("archive entry " + e.id + " has inconsistent shape or class count");
        }
        archive.ids.push_back(e.id);
        archive.images.push_back(std::move(img.pixels));
        archive.maps.push_back(std::move(map));
    }
    if (wanted && archive.ids.size() != wanted->size())
        throw DataError("archive " + dir + " is missing requested ids (" +
                        std::to_string(archive.ids.size()) + " of " +
                        std::to_string(wanted->size()) + " found)");
    if (archive.ids.empty()) throw DataError("archive " + dir + " contains no images");
    return archive;
}

void write_archive(const std::string& dir, const std::vector<SynthImage>& archive, int channels) {
    const fs::path base(dir);
    std::error_code ec;
    fs::create_directories(base, ec);
    if (ec) throw DataError("cannot create archive directory: " + dir);

    std::ofstream manifest(base / "manifest.tsv", std::ios::binary);
    if (!manifest) throw DataError("cannot write archive manifest in " + dir);
    for (const auto& item : archive) {
        const std::string lmap_name = item.id + ".lmap";
        const std::string img_name = item.id + ".img";
        write_label_map_file((base / lmap_name).string(), item.map);
        write_image_file((base / img_name).string(), item.image, item.map.height, item.map.width,
                         channels);
        manifest << item.id << '\t' << lmap_name << '\t' << img_name << '\n';
    }
}

std::vector<std::string> read_id_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open id file: " + path);
    std::vector<std::string> ids;
    std::string line;
    while (read_line(in, line)) {
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 1) throw DataError(path + ": expected one id per line");
        ids.emplace_back(fields[0]);
    }
    if (ids.empty()) throw DataError(path + ": id file is empty");
    return ids;
}

}  // namespace rrl
