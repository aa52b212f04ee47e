#include "rrl/graph.hpp"

#include <algorithm>
#include <cmath>

#include "rrl/error.hpp"

namespace rrl {

namespace {

double pair_weight(const RegionStats& stats, int p, int q, const WeightConfig& cfg,
                   const ResolvedNorms& norms) {
    if (!stats.present(p) || !stats.present(q)) return 0.0;
    if (cfg.mode == WeightMode::binary) return 1.0;

    auto s_p = static_cast<double>(stats.sizes[static_cast<std::size_t>(p)]);
    auto s_q = static_cast<double>(stats.sizes[static_cast<std::size_t>(q)]);
    double d = 0.0;
    if (p != q) {
        const Centroid& a = stats.centroids[static_cast<std::size_t>(p)];
        const Centroid& b = stats.centroids[static_cast<std::size_t>(q)];
        double dr = a.row - b.row;
        double dc = a.col - b.col;
        d = std::sqrt(dr * dr + dc * dc);
    }
    double w = (s_p * s_q / norms.size_norm) * (1.0 - d / norms.dist_norm);
    if (cfg.mode == WeightMode::scaled) w *= norms.target_scale;
    return w;
}

}  // namespace

ResolvedNorms resolve_norms(const WeightConfig& cfg, int height, int width) {
    double area = static_cast<double>(height) * width;
    ResolvedNorms norms;
    norms.size_norm = cfg.size_norm.value_or(area);
    norms.dist_norm = cfg.dist_norm.value_or(
        std::sqrt(static_cast<double>(height) * height + static_cast<double>(width) * width));
    norms.target_scale = cfg.target_scale.value_or(4.0 / area);
    if (norms.size_norm <= 0.0 || norms.dist_norm <= 0.0 || norms.target_scale <= 0.0)
        throw DataError("weight normalizers must be positive");
    return norms;
}

double RegionGraph::weight(int p, int q) const {
    if (p > q) std::swap(p, q);
    for (const auto& e : edges)
        if (e.p == p && e.q == q) return e.weight;
    return 0.0;
}

AdjacencyMatrix make_zero_adjacency(int num_classes) {
    AdjacencyMatrix a;
    a.num_classes = num_classes;
    a.entries.assign(static_cast<std::size_t>(num_classes) * num_classes, 0.0);
    return a;
}

double edge_weight(const LabelMap& map, int p, int q, const WeightConfig& cfg) {
    if (p < 0 || p >= map.num_classes || q < 0 || q >= map.num_classes)
        throw DataError("class id out of range: (" + std::to_string(p) + ", " +
                        std::to_string(q) + ") with C = " + std::to_string(map.num_classes));
    if (p == q && !cfg.self_edges) return 0.0;
    return pair_weight(region_stats(map), p, q, cfg, resolve_norms(cfg, map.height, map.width));
}

RegionGraph build_graph(const LabelMap& map, const WeightConfig& cfg) {
    RegionStats stats = region_stats(map);
    ResolvedNorms norms = resolve_norms(cfg, map.height, map.width);

    RegionGraph g;
    for (int c = 0; c < map.num_classes; ++c)
        if (stats.present(c)) g.nodes.push_back(c);
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t j = i; j < g.nodes.size(); ++j) {
            int p = g.nodes[i], q = g.nodes[j];
            if (p == q && !cfg.self_edges) continue;
            g.edges.push_back({p, q, pair_weight(stats, p, q, cfg, norms)});
        }
    return g;
}

AdjacencyMatrix adjacency(const RegionGraph& g, int num_classes) {
    AdjacencyMatrix a = make_zero_adjacency(num_classes);
    for (const auto& e : g.edges) {
        if (e.p >= num_classes || e.q >= num_classes)
            throw DataError("graph node id " + std::to_string(std::max(e.p, e.q)) +
                            " exceeds class count " + std::to_string(num_classes));
        a.at(e.p, e.q) = e.weight;
        a.at(e.q, e.p) = e.weight;
    }
    return a;
}

AdjacencyMatrix adjacency_from_map(const LabelMap& map, const WeightConfig& cfg) {
    return adjacency(build_graph(map, cfg), map.num_classes);
}

std::vector<double> flatten(const AdjacencyMatrix& a) { return a.entries; }

AdjacencyMatrix unflatten(const std::vector<double>& v, int num_classes) {
    if (v.size() != static_cast<std::size_t>(num_classes) * num_classes)
        throw DataError("vector length " + std::to_string(v.size()) +
                        " is not C^2 for C = " + std::to_string(num_classes));
    AdjacencyMatrix a;
    a.num_classes = num_classes;
    a.entries = v;
    return a;
}

}  // namespace rrl
