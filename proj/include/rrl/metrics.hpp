#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrl/labelmap.hpp"
#include "rrl/retrieval.hpp"

namespace rrl {

// Relevance of one retrieved image to a query: the number of shared
// labels (graded) and whether any label is shared (binary).
struct RelevanceJudgment {
    int shared = 0;
    bool relevant = false;
};

RelevanceJudgment judge(const MultiLabelVector& query_labels,
                        const MultiLabelVector& retrieved_labels);

// Gain assigned to a shared-label count: the raw count, or 2^shared - 1.
enum class GainPolicy { linear, exponential };

// AP@k = sum over relevant ranks r <= k of precision@r, divided by the
// number of relevant items in the top k; 0 when none are relevant.
double average_precision(const std::vector<std::uint8_t>& relevant, std::size_t k);

// Mean gain over the top k.
double acg_at_k(const std::vector<int>& shared, std::size_t k,
                GainPolicy policy = GainPolicy::linear);

// DCG@k with gains discounted by log2(rank + 1), normalized by the DCG of
// the same list reordered descending; 0 when the ideal DCG is 0.
double ndcg_at_k(const std::vector<int>& shared, std::size_t k,
                 GainPolicy policy = GainPolicy::linear);

struct QueryItem {
    std::string id;
    std::vector<double> descriptor;
    MultiLabelVector labels;
};

// Per-k averages over queries, k = 1..k_max (index k-1).
struct EvalCurve {
    std::vector<double> map;
    std::vector<double> acg;
    std::vector<double> ndcg;
};

// Ranks the store for every query (the query's own entry, when stored, is
// excluded), judges relevance against the stored label vectors, and
// averages the three metrics at each cutoff.
EvalCurve evaluate(const DescriptorStore& store, const std::vector<QueryItem>& queries,
                   std::size_t k_max, GainPolicy policy = GainPolicy::linear, int threads = 1);

}  // namespace rrl
