#pragma once

#include <optional>
#include <vector>

#include "rrl/labelmap.hpp"

namespace rrl {

// binary: 1 whenever both classes are present.
// literal: (s(p)*s(q)/n_s) * (1 - d(p,q)/n_d).
// scaled: literal times target_scale, the default regression target.
enum class WeightMode { binary, literal, scaled };

// Unset normalizers resolve to the maximum attainable values for the map
// size: n_s = H*W, n_d = sqrt(H^2 + W^2), target_scale = 4/(H*W). With
// those defaults every off-diagonal scaled weight lies in [0, 1];
// diagonal weights can reach 4 when one class covers more than half the
// image (s(p)^2 is not capped by (H*W)^2/4).
struct WeightConfig {
    WeightMode mode = WeightMode::scaled;
    std::optional<double> size_norm;
    std::optional<double> dist_norm;
    std::optional<double> target_scale;
    bool self_edges = true;
};

struct ResolvedNorms {
    double size_norm = 0.0;
    double dist_norm = 0.0;
    double target_scale = 0.0;
};

ResolvedNorms resolve_norms(const WeightConfig& cfg, int height, int width);

struct GraphEdge {
    int p = 0;
    int q = 0;  // p <= q
    double weight = 0.0;
};

// Per-image region graph: one node per present class, one edge per
// unordered pair of present classes (self-edges included by default).
struct RegionGraph {
    std::vector<int> nodes;        // ascending class ids
    std::vector<GraphEdge> edges;  // ascending (p, q)

    double weight(int p, int q) const;
};

struct AdjacencyMatrix {
    int num_classes = 0;
    std::vector<double> entries;  // row-major num_classes^2

    double at(int p, int q) const { return entries[static_cast<std::size_t>(p) * num_classes + q]; }
    double& at(int p, int q) { return entries[static_cast<std::size_t>(p) * num_classes + q]; }
};

AdjacencyMatrix make_zero_adjacency(int num_classes);

double edge_weight(const LabelMap& map, int p, int q, const WeightConfig& cfg);
RegionGraph build_graph(const LabelMap& map, const WeightConfig& cfg);
AdjacencyMatrix adjacency(const RegionGraph& g, int num_classes);
AdjacencyMatrix adjacency_from_map(const LabelMap& map, const WeightConfig& cfg);

// Row-major vectorization and its inverse.
std::vector<double> flatten(const AdjacencyMatrix& a);
AdjacencyMatrix unflatten(const std::vector<double>& v, int num_classes);

}  // namespace rrl
