#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gip/tensor.hpp"

namespace gip {

/// Dataset/file-level failure (missing files, malformed records, bad indices).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Node-attributed undirected graph with weighted adjacency. The universal
/// carrier: input graphs, coarsened graphs and patterns-as-graphs all use it.
struct AttributedGraph {
    Tensor features;   // N x d
    Tensor adjacency;  // N x N, symmetric, non-negative
    std::optional<int> label;

    int num_nodes() const { return features.rows(); }
    int feature_dim() const { return features.cols(); }

    /// Enforces the structural invariants (symmetry within 1e-12, square
    /// adjacency, matching node counts). Zero diagonal is checked only when
    /// `require_zero_diagonal` (input graphs; coarsened ones may carry
    /// self-weight before filtering).
    void validate(bool require_zero_diagonal = true) const;
};

/// Ground truth for one synthetic graph: the community-level layout used to
/// build it.
struct SuperGraphInfo {
    std::string layout;                            // cycle, tree, wheel, grid, ladder, star
    std::vector<int> community_of;                 // node -> community id
    std::vector<std::pair<int, int>> super_edges;  // community-level edges
    int num_communities = 0;
};

struct GraphDataset {
    std::string name;
    std::vector<AttributedGraph> graphs;
    int num_classes = 0;
    int feature_dim = 0;

    /// Present only for generated datasets; parallel to `graphs`.
    std::vector<SuperGraphInfo> super_graphs;

    bool has_ground_truth() const { return super_graphs.size() == graphs.size() && !graphs.empty(); }
    void validate() const;
};

struct SplitSpec {
    std::vector<int> train, val, test;
    uint64_t seed = 0;
};

/// Symmetric normalization with self-loops: D^{-1/2} (A + I) D^{-1/2}.
Tensor normalize_adjacency(const Tensor& adjacency);

/// Stratified split with the given (train, val, test) ratios. Ratios must be
/// positive and sum to 1 within 1e-9. Every class must have at least as many
/// graphs as there are parts.
SplitSpec split_dataset(const GraphDataset& dataset, double train_ratio, double val_ratio,
                        double test_ratio, uint64_t seed);

/// Builds an AttributedGraph from an edge list with unit node features
/// (one feature column of ones). Used for ground-truth motifs.
AttributedGraph graph_from_edges(int num_nodes, const std::vector<std::pair<int, int>>& edges);

}  // namespace gip
