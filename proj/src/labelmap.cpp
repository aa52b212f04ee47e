#include "rrl/labelmap.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rrl/error.hpp"
#include "rrl/textio.hpp"

namespace rrl {

LabelMap load_label_map(std::istream& in) {
    std::string line;
    if (!read_line(in, line) || line != "LMAP v1")
        throw DataError("malformed header: expected 'LMAP v1' on line 1");
    if (!read_line(in, line))
        throw DataError("malformed header: missing 'H W C' line");
    auto dims = split_fields(line);
    if (dims.size() != 3)
        throw DataError("malformed header: expected 'H W C', got '" + line + "'");

    LabelMap map;
    map.height = static_cast<int>(parse_int(dims[0], "height"));
    map.width = static_cast<int>(parse_int(dims[1], "width"));
    map.num_classes = static_cast<int>(parse_int(dims[2], "class count"));
    if (map.height < 1 || map.width < 1 || map.num_classes < 1)
        throw DataError("malformed header: H, W and C must all be >= 1");

    map.pixels.reserve(static_cast<std::size_t>(map.height) * map.width);
    for (int r = 0; r < map.height; ++r) {
        if (!read_line(in, line))
            throw DataError("empty map: expected " + std::to_string(map.height) +
                            " pixel rows, got " + std::to_string(r));
        auto fields = split_fields(line);
        if (static_cast<int>(fields.size()) != map.width)
            throw DataError("row length mismatch on row " + std::to_string(r) +
                            ": expected " + std::to_string(map.width) + " ids, got " +
                            std::to_string(fields.size()));
        for (auto f : fields) {
            long long id = parse_int(f, "class id");
            if (id < 0 || id >= map.num_classes)
                throw DataError("class id out of range on row " + std::to_string(r) +
                                ": " + std::to_string(id) + " not in [0, " +
                                std::to_string(map.num_classes) + ")");
            map.pixels.push_back(static_cast<std::int32_t>(id));
        }
    }
    while (read_line(in, line)) {
        if (!split_fields(line).empty())
            throw DataError("row length mismatch: trailing content after " +
                            std::to_string(map.height) + " rows");
    }
    return map;
}

LabelMap load_label_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label map file: " + path);
    try {
        return load_label_map(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_label_map(std::ostream& out, const LabelMap& map) {
    out << "LMAP v1\n" << map.height << ' ' << map.width << ' ' << map.num_classes << '\n';
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            if (c) out << ' ';
            out << map.at(r, c);
        }
        out << '\n';
    }
}

void write_label_map_file(const std::string& path, const LabelMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write label map file: " + path);
    write_label_map(out, map);
}

void validate_label_map(const LabelMap& map) {
    if (map.height < 1 || map.width < 1 || map.num_classes < 1)
        throw DataError("label map dimensions must be >= 1");
    if (map.pixels.size() != static_cast<std::size_t>(map.height) * map.width)
        throw DataError("label map pixel count does not match height*width");
    for (auto id : map.pixels)
        if (id < 0 || id >= map.num_classes)
            throw DataError("class id out of range: " + std::to_string(id));
}

MultiLabelVector labels_present(const LabelMap& map, const LabelSet& ls) {
    if (ls.num_classes != map.num_classes)
        throw DataError("label set size " + std::to_string(ls.num_classes) +
                        " does not match map class count " + std::to_string(map.num_classes));
    MultiLabelVector v;
    v.bits.assign(static_cast<std::size_t>(ls.num_classes), 0);
    for (auto id : map.pixels) v.bits[static_cast<std::size_t>(id)] = 1;
    return v;
}

std::int64_t region_size(const LabelMap& map, int cls) {
    if (cls < 0 || cls >= map.num_classes)
        throw DataError("class id out of range: " + std::to_string(cls));
    std::int64_t n = 0;
    for (auto id : map.pixels) n += (id == cls);
    return n;
}

Centroid region_centroid(const LabelMap& map, int cls) {
    if (cls < 0 || cls >= map.num_classes)
        throw DataError("class id out of range: " + std::to_string(cls));
    std::int64_t n = 0;
    double row_sum = 0.0, col_sum = 0.0;
    for (int r = 0; r < map.height; ++r)
        for (int c = 0; c < map.width; ++c)
            if (map.at(r, c) == cls) {
                ++n;
                row_sum += r;
                col_sum += c;
            }
    if (n == 0)
        throw DataError("no region: class " + std::to_string(cls) + " is absent from the map");
    return {row_sum / static_cast<double>(n), col_sum / static_cast<double>(n)};
}

double region_distance(const LabelMap& map, int p, int q) {
    Centroid a = region_centroid(map, p);
    Centroid b = region_centroid(map, q);
    double dr = a.row - b.row;
    double dc = a.col - b.col;
    return std::sqrt(dr * dr + dc * dc);
}

RegionStats region_stats(const LabelMap& map) {
    RegionStats stats;
    const std::size_t c_count = static_cast<std::size_t>(map.num_classes);
    stats.sizes.assign(c_count, 0);
    std::vector<double> row_sum(c_count, 0.0), col_sum(c_count, 0.0);
    for (int r = 0; r < map.height; ++r)
        for (int c = 0; c < map.width; ++c) {
            auto id = static_cast<std::size_t>(map.at(r, c));
            ++stats.sizes[id];
            row_sum[id] += r;
            col_sum[id] += c;
        }
    stats.centroids.assign(c_count, Centroid{});
    for (std::size_t i = 0; i < c_count; ++i)
        if (stats.sizes[i] > 0) {
            auto n = static_cast<double>(stats.sizes[i]);
            stats.centroids[i] = {row_sum[i] / n, col_sum[i] / n};
        }
    return stats;
}

}  // namespace rrl
