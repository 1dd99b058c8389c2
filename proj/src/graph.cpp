#include "gip/graph.hpp"

#include <algorithm>
#include <cmath>

#include "gip/rng.hpp"

namespace gip {

void AttributedGraph::validate(bool require_zero_diagonal) const {
    const int n = features.rows();
    if (adjacency.rows() != n || adjacency.cols() != n)
        throw DataError("graph: adjacency " + adjacency.shape_str() + " does not match " +
                        std::to_string(n) + " nodes");
    for (int i = 0; i < n; ++i) {
        if (require_zero_diagonal && adjacency.at(i, i) != 0.0)
            throw DataError("graph: non-zero diagonal at node " + std::to_string(i));
        for (int j = i + 1; j < n; ++j) {
            if (std::fabs(adjacency.at(i, j) - adjacency.at(j, i)) > 1e-12)
                throw DataError("graph: asymmetric adjacency at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
            if (adjacency.at(i, j) < 0.0)
                throw DataError("graph: negative edge weight at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
        }
    }
}

void GraphDataset::validate() const {
    if (num_classes < 2) throw DataError("dataset " + name + ": fewer than 2 classes");
    for (size_t i = 0; i < graphs.size(); ++i) {
        const auto& g = graphs[i];
        if (g.feature_dim() != feature_dim)
            throw DataError("dataset " + name + ": graph " + std::to_string(i) +
                            " feature dim mismatch");
        if (!g.label || *g.label < 0 || *g.label >= num_classes)
            throw DataError("dataset " + name + ": graph " + std::to_string(i) +
                            " has label outside 0.." + std::to_string(num_classes - 1));
    }
}

Tensor normalize_adjacency(const Tensor& adjacency) {
    const int n = adjacency.rows();
    if (adjacency.cols() != n)
        throw ShapeError("normalize_adjacency: adjacency is " + adjacency.shape_str());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::fabs(adjacency.at(i, j) - adjacency.at(j, i)) > 1e-12)
                throw ShapeError("normalize_adjacency: asymmetric input");

    std::vector<double> dinv_sqrt(n);
    for (int i = 0; i < n; ++i) {
        double deg = 1.0;  // self-loop
        for (int j = 0; j < n; ++j) deg += adjacency.at(i, j);
        dinv_sqrt[i] = 1.0 / std::sqrt(deg);
    }
    Tensor out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double hat = adjacency.at(i, j) + (i == j ? 1.0 : 0.0);
            out.at(i, j) = dinv_sqrt[i] * hat * dinv_sqrt[j];
        }
    return out;
}

SplitSpec split_dataset(const GraphDataset& dataset, double train_ratio, double val_ratio,
                        double test_ratio, uint64_t seed) {
    if (train_ratio <= 0.0 || val_ratio <= 0.0 || test_ratio <= 0.0)
        throw DataError("split: ratios must be positive");
    if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw DataError("split: ratios must sum to 1");

    std::vector<std::vector<int>> by_class(dataset.num_classes);
    for (size_t i = 0; i < dataset.graphs.size(); ++i)
        by_class[*dataset.graphs[i].label].push_back(static_cast<int>(i));

    SplitSpec spec;
    spec.seed = seed;
    Rng rng(seed);
    const double ratios[3] = {train_ratio, val_ratio, test_ratio};
    const int n_total = static_cast<int>(dataset.graphs.size());

    // Global part sizes by largest remainder, each part at least 1.
    int global_target[3] = {1, 1, 1};
    {
        int rest = n_total - 3;
        double frac[3];
        for (int p = 0; p < 3; ++p) {
            const double quota = ratios[p] * n_total - 1.0;
            const int whole = std::max(0, static_cast<int>(std::floor(quota)));
            const int take = std::min(whole, rest);
            global_target[p] += take;
            rest -= take;
            frac[p] = quota - whole;
        }
        while (rest > 0) {
            int best = 0;
            for (int p = 1; p < 3; ++p)
                if (frac[p] > frac[best]) best = p;
            global_target[best] += 1;
            frac[best] -= 1.0;
            --rest;
        }
    }
    if (global_target[0] < dataset.num_classes)
        throw DataError("split: train part too small to cover all classes");

    int deficit[3] = {global_target[0], global_target[1], global_target[2]};
    for (int c = 0; c < dataset.num_classes; ++c) {
        auto& idx = by_class[c];
        if (static_cast<int>(idx.size()) < 3)
            throw DataError("split: class " + std::to_string(c) + " has only " +
                            std::to_string(idx.size()) + " graphs, need at least 3");
        rng.shuffle(idx);
        const int n = static_cast<int>(idx.size());
        int counts[3];
        double frac[3];
        for (int p = 0; p < 3; ++p) {
            counts[p] = static_cast<int>(std::floor(ratios[p] * n));
            frac[p] = ratios[p] * n - counts[p];
        }
        if (counts[0] == 0) counts[0] = 1;  // every class present in train
        int rest = n - counts[0] - counts[1] - counts[2];
        while (rest < 0) {  // the forced train slot overdrew; shrink the largest other part
            int victim = counts[1] >= counts[2] ? 1 : 2;
            counts[victim] -= 1;
            ++rest;
        }
        // Leftovers go where the global split is still short, then by largest
        // fractional quota.
        while (rest > 0) {
            int best = -1;
            for (int p = 0; p < 3; ++p) {
                if (best < 0) {
                    best = p;
                    continue;
                }
                const bool p_short = deficit[p] - counts[p] > 0;
                const bool b_short = deficit[best] - counts[best] > 0;
                if (p_short != b_short) {
                    if (p_short) best = p;
                } else if (frac[p] > frac[best] + 1e-12) {
                    best = p;
                }
            }
            counts[best] += 1;
            frac[best] -= 1.0;
            --rest;
        }
        for (int p = 0; p < 3; ++p) deficit[p] -= counts[p];
        int pos = 0;
        for (int i = 0; i < counts[0]; ++i) spec.train.push_back(idx[pos++]);
        for (int i = 0; i < counts[1]; ++i) spec.val.push_back(idx[pos++]);
        for (int i = 0; i < counts[2]; ++i) spec.test.push_back(idx[pos++]);
    }
    std::sort(spec.train.begin(), spec.train.end());
    std::sort(spec.val.begin(), spec.val.end());
    std::sort(spec.test.begin(), spec.test.end());
    return spec;
}

AttributedGraph graph_from_edges(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
    AttributedGraph g;
    g.features = Tensor::ones(num_nodes, 1);
    g.adjacency = Tensor(num_nodes, num_nodes);
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes || u == v)
            throw DataError("graph_from_edges: bad edge " + std::to_string(u) + "-" + std::to_string(v));
        g.adjacency.at(u, v) = 1.0;
        g.adjacency.at(v, u) = 1.0;
    }
    return g;
}

}  // namespace gip
