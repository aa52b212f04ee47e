#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrl/retrieval.hpp"

namespace rrl::cli {

struct LabeledId {
    std::string id;
    MultiLabelVector labels;
};

// Control condition for retrieval experiments: per image id a seeded
// uniform [0, 1) descriptor of length gamma. The per-id stream is derived
// from (seed, FNV-1a(id)), so stores are reproducible and id-keyed.
DescriptorStore make_baseline_store(const std::vector<LabeledId>& items, int gamma,
                                    std::uint64_t seed);

// Entry point behind the rrl binary. Returns 0 on success, 1 on usage
// errors, 2 on data errors.
int run(int argc, const char* const* argv);

}  // namespace rrl::cli
