#include "rrl/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "rrl/error.hpp"
#include "rrl/textio.hpp"

namespace rrl {

namespace {
constexpr double kChiEps = 1e-12;
}

void DescriptorStore::add(DescriptorEntry entry) {
    if (entry.descriptor.size() != static_cast<std::size_t>(gamma_))
        throw DataError("descriptor length " + std::to_string(entry.descriptor.size()) +
                        " does not match store gamma " + std::to_string(gamma_));
    if (entry.labels.bits.size() != static_cast<std::size_t>(num_classes_))
        throw DataError("label vector length does not match store class count");
    for (double v : entry.descriptor)
        if (!(v >= 0.0))
            throw DataError("negative or non-finite descriptor element for id " + entry.id);
    auto pos = std::lower_bound(entries_.begin(), entries_.end(), entry.id,
                                [](const DescriptorEntry& e, const std::string& id) { return e.id < id; });
    if (pos != entries_.end() && pos->id == entry.id)
        throw DataError("duplicate image id in descriptor store: " + entry.id);
    entries_.insert(pos, std::move(entry));
}

const DescriptorEntry* DescriptorStore::find(const std::string& id) const {
    auto pos = std::lower_bound(entries_.begin(), entries_.end(), id,
                                [](const DescriptorEntry& e, const std::string& i) { return e.id < i; });
    if (pos == entries_.end() || pos->id != id) return nullptr;
    return &*pos;
}

double chi_square(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DataError("chi-square length mismatch: " + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] < 0.0 || v[i] < 0.0)
            throw DataError("chi-square requires non-negative elements");
        double diff = u[i] - v[i];
        acc += diff * diff / (u[i] + v[i] + kChiEps);
    }
    return 0.5 * acc;
}

RankedResult query(const DescriptorStore& store, std::span<const double> descriptor, std::size_t k,
                   const std::string* exclude_id) {
    if (k == 0) throw DataError("query k must be >= 1");
    if (descriptor.size() != static_cast<std::size_t>(store.gamma()))
        throw DataError("query descriptor length does not match store gamma");

    RankedResult ranked;
    ranked.reserve(store.size());
    for (const auto& e : store.entries()) {
        if (exclude_id && e.id == *exclude_id) continue;
        ranked.push_back({e.id, chi_square(descriptor, e.descriptor)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

RankedResult query_by_id(const DescriptorStore& store, const std::string& id, std::size_t k) {
    const DescriptorEntry* entry = store.find(id);
    if (!entry) throw DataError("unknown query id: " + id);
    return query(store, entry->descriptor, k, &id);
}

void write_desc(std::ostream& out, const DescriptorStore& store) {
    out << "DESC v1\n"
        << store.size() << ' ' << store.gamma() << ' ' << store.num_classes() << '\n';
    for (const auto& e : store.entries()) {
        out << e.id;
        for (auto b : e.labels.bits) out << ' ' << static_cast<int>(b);
        for (double v : e.descriptor) out << ' ' << format_double(v);
        out << '\n';
    }
}

DescriptorStore read_desc(std::istream& in) {
    std::string line;
    if (!read_line(in, line) || line != "DESC v1")
        throw DataError("malformed header: expected 'DESC v1' on line 1");
    if (!read_line(in, line)) throw DataError("malformed header: missing 'count gamma C' line");
    auto dims = split_fields(line);
    if (dims.size() != 3)
        throw DataError("malformed header: expected 'count gamma C', got '" + line + "'");
    auto count = parse_int(dims[0], "entry count");
    int gamma = static_cast<int>(parse_int(dims[1], "gamma"));
    int num_classes = static_cast<int>(parse_int(dims[2], "class count"));
    if (count < 0 || gamma < 1 || num_classes < 1)
        throw DataError("malformed header: counts must be positive");

    DescriptorStore store(gamma, num_classes);
    for (long long i = 0; i < count; ++i) {
        if (!read_line(in, line))
            throw DataError("truncated store: expected " + std::to_string(count) + " entries");
        auto fields = split_fields(line);
        if (fields.size() != 1 + static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(gamma))
            throw DataError("entry " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                            " fields, expected " +
                            std::to_string(1 + num_classes + gamma));
        DescriptorEntry e;
        e.id = std::string(fields[0]);
        e.labels.bits.reserve(static_cast<std::size_t>(num_classes));
        for (int b = 0; b < num_classes; ++b) {
            auto bit = parse_int(fields[static_cast<std::size_t>(1 + b)], "label bit");
            if (bit != 0 && bit != 1) throw DataError("label bits must be 0 or 1");
            e.labels.bits.push_back(static_cast<std::uint8_t>(bit));
        }
        e.descriptor.reserve(static_cast<std::size_t>(gamma));
        for (int g = 0; g < gamma; ++g)
            e.descriptor.push_back(
                parse_double(fields[static_cast<std::size_t>(1 + num_classes + g)], "descriptor value"));
        store.add(std::move(e));
    }
    return store;
}

void write_desc_file(const std::string& path, const DescriptorStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write descriptor store: " + path);
    write_desc(out, store);
}

DescriptorStore read_desc_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open descriptor store: " + path);
    try {
        return read_desc(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

}  // namespace rrl
