#include "rrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "rrl/error.hpp"

namespace rrl {

namespace {

double gain(int shared, GainPolicy policy) {
    if (policy == GainPolicy::linear) return static_cast<double>(shared);
    return std::exp2(static_cast<double>(shared)) - 1.0;
}

void check_cutoff(std::size_t length, std::size_t k) {
    if (k < 1 || k > length)
        throw DataError("cutoff k = " + std::to_string(k) + " out of range for list of length " +
                        std::to_string(length));
}

}  // namespace

RelevanceJudgment judge(const MultiLabelVector& query_labels,
                        const MultiLabelVector& retrieved_labels) {
    if (query_labels.bits.size() != retrieved_labels.bits.size())
        throw DataError("label vector length mismatch: " +
                        std::to_string(query_labels.bits.size()) + " vs " +
                        std::to_string(retrieved_labels.bits.size()));
    RelevanceJudgment j;
    for (std::size_t i = 0; i < query_labels.bits.size(); ++i)
        j.shared += query_labels.bits[i] & retrieved_labels.bits[i];
    j.relevant = j.shared > 0;
    return j;
}

double average_precision(const std::vector<std::uint8_t>& relevant, std::size_t k) {
    check_cutoff(relevant.size(), k);
    int hits = 0;
    double acc = 0.0;
    for (std::size_t r = 0; r < k; ++r)
        if (relevant[r]) {
            ++hits;
            acc += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    if (hits == 0) return 0.0;
    return acc / static_cast<double>(hits);
}

double acg_at_k(const std::vector<int>& shared, std::size_t k, GainPolicy policy) {
    check_cutoff(shared.size(), k);
    double acc = 0.0;
    for (std::size_t r = 0; r < k; ++r) acc += gain(shared[r], policy);
    return acc / static_cast<double>(k);
}

double ndcg_at_k(const std::vector<int>& shared, std::size_t k, GainPolicy policy) {
    check_cutoff(shared.size(), k);
    double dcg = 0.0;
    for (std::size_t r = 0; r < k; ++r)
        dcg += gain(shared[r], policy) / std::log2(static_cast<double>(r + 2));
    std::vector<int> ideal(shared.begin(), shared.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < k; ++r)
        idcg += gain(ideal[r], policy) / std::log2(static_cast<double>(r + 2));
    if (idcg == 0.0) return 0.0;
    return dcg / idcg;
}

EvalCurve evaluate(const DescriptorStore& store, const std::vector<QueryItem>& queries,
                   std::size_t k_max, GainPolicy policy, int threads) {
    if (queries.empty()) throw DataError("query set is empty");
    if (k_max < 1) throw DataError("k_max must be >= 1");
    for (const auto& q : queries) {
        std::size_t effective = store.size() - (store.find(q.id) ? 1 : 0);
        if (k_max > effective)
            throw DataError("k_max = " + std::to_string(k_max) +
                            " exceeds retrievable archive size " + std::to_string(effective) +
                            " for query " + q.id);
    }

    // One metric triple per (query, k); reduced over queries in fixed
    // query order afterwards.
    struct PerQuery {
        std::vector<double> map, acg, ndcg;
    };
    std::vector<PerQuery> per_query(queries.size());

    auto eval_one = [&](std::size_t qi) {
        const QueryItem& q = queries[qi];
        RankedResult ranked = query(store, q.descriptor, k_max, &q.id);
        std::vector<int> shared;
        std::vector<std::uint8_t> relevant;
        shared.reserve(ranked.size());
        relevant.reserve(ranked.size());
        for (const auto& item : ranked) {
            const DescriptorEntry* entry = store.find(item.id);
            RelevanceJudgment j = judge(q.labels, entry->labels);
            shared.push_back(j.shared);
            relevant.push_back(j.relevant ? 1 : 0);
        }
        PerQuery& out = per_query[qi];
        out.map.resize(k_max);
        out.acg.resize(k_max);
        out.ndcg.resize(k_max);
        for (std::size_t k = 1; k <= k_max; ++k) {
            out.map[k - 1] = average_precision(relevant, k);
            out.acg[k - 1] = acg_at_k(shared, k, policy);
            out.ndcg[k - 1] = ndcg_at_k(shared, k, policy);
        }
    };

    const int workers = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), queries.size()));
    if (workers <= 1) {
        for (std::size_t qi = 0; qi < queries.size(); ++qi) eval_one(qi);
    } else {
        std::mutex err_mutex;
        std::exception_ptr first_error;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t qi = static_cast<std::size_t>(w); qi < queries.size();
                         qi += static_cast<std::size_t>(workers))
                        eval_one(qi);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    EvalCurve curve;
    curve.map.assign(k_max, 0.0);
    curve.acg.assign(k_max, 0.0);
    curve.ndcg.assign(k_max, 0.0);
    for (const auto& pq : per_query)
        for (std::size_t k = 0; k < k_max; ++k) {
            curve.map[k] += pq.map[k];
            curve.acg[k] += pq.acg[k];
            curve.ndcg[k] += pq.ndcg[k];
        }
    const double n = static_cast<double>(queries.size());
    for (std::size_t k = 0; k < k_max; ++k) {
        curve.map[k] /= n;
        curve.acg[k] /= n;
        curve.ndcg[k] /= n;
    }
    return curve;
}

}  // namespace rrl
