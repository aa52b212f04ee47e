#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rrl/labelmap.hpp"

namespace rrl {

struct DescriptorEntry {
    std::string id;
    std::vector<double> descriptor;  // length gamma, element-wise >= 0
    MultiLabelVector labels;
};

// Archive of descriptors keyed by image id, plus the label vectors needed
// for evaluation. Immutable once filled; entries are kept sorted by id so
// store content never depends on insertion order.
class DescriptorStore {
public:
    DescriptorStore() = default;
    DescriptorStore(int gamma, int num_classes) : gamma_(gamma), num_classes_(num_classes) {}

    void add(DescriptorEntry entry);
    const DescriptorEntry* find(const std::string& id) const;
    const std::vector<DescriptorEntry>& entries() const { return entries_; }
    int gamma() const { return gamma_; }
    int num_classes() const { return num_classes_; }
    std::size_t size() const { return entries_.size(); }

private:
    int gamma_ = 0;
    int num_classes_ = 0;
    std::vector<DescriptorEntry> entries_;
};

// 0.5 * sum (u_i - v_i)^2 / (u_i + v_i + eps), eps = 1e-12. Inputs must be
// non-negative and of equal length.
double chi_square(std::span<const double> u, std::span<const double> v);

struct RankedItem {
    std::string id;
    double distance = 0.0;
};

// Distances ascending; ties broken by ascending image id.
using RankedResult = std::vector<RankedItem>;

// Exhaustive scan; k larger than the store returns every entry. When
// `exclude_id` is non-null the matching entry is skipped.
RankedResult query(const DescriptorStore& store, std::span<const double> descriptor, std::size_t k,
                   const std::string* exclude_id = nullptr);

// Query by a stored id; that entry itself is excluded from the ranking.
RankedResult query_by_id(const DescriptorStore& store, const std::string& id, std::size_t k);

// DESC v1: line 1 "DESC v1"; line 2 "count gamma C"; then one line per
// image: id, C label bits, gamma floats, space-separated. Floats use the
// shortest round-trip form, so write/read is bit-exact.
void write_desc(std::ostream& out, const DescriptorStore& store);
DescriptorStore read_desc(std::istream& in);
void write_desc_file(const std::string& path, const DescriptorStore& store);
DescriptorStore read_desc_file(const std::string& path);

}  // namespace rrl
