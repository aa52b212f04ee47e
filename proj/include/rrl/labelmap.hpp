#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rrl {

// The class nomenclature: ids are dense in [0, num_classes).
struct LabelSet {
    int num_classes = 0;
    std::vector<std::string> names;  // optional; empty or exactly num_classes
};

// Per-pixel class assignment for one image. Every pixel carries a label;
// there is no background / unlabeled sentinel. Pixel (r, c) sits at
// coordinate (r, c), origin top-left.
struct LabelMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<std::int32_t> pixels;  // row-major height*width

    std::int32_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

// Presence bit per class; at least one bit is set for any valid map.
struct MultiLabelVector {
    std::vector<std::uint8_t> bits;

    int count() const {
        int n = 0;
        for (auto b : bits) n += b;
        return n;
    }
};

struct Centroid {
    double row = 0.0;
    double col = 0.0;
};

// Per-class pixel counts and region centers. A class's region is the
// union of all its pixels, connected or not; centroids are valid only
// where sizes[c] > 0.
struct RegionStats {
    std::vector<std::int64_t> sizes;
    std::vector<Centroid> centroids;

    bool present(int cls) const { return sizes[static_cast<std::size_t>(cls)] > 0; }
};

// LMAP v1 reader/writer. Format: line 1 "LMAP v1"; line 2 "H W C"; then
// H lines of W space-separated class ids. UTF-8, LF.
LabelMap load_label_map(std::istream& in);
LabelMap load_label_map_file(const std::string& path);
void write_label_map(std::ostream& out, const LabelMap& map);
void write_label_map_file(const std::string& path, const LabelMap& map);

void validate_label_map(const LabelMap& map);

MultiLabelVector labels_present(const LabelMap& map, const LabelSet& ls);
std::int64_t region_size(const LabelMap& map, int cls);
Centroid region_centroid(const LabelMap& map, int cls);
double region_distance(const LabelMap& map, int p, int q);
RegionStats region_stats(const LabelMap& map);

}  // namespace rrl
