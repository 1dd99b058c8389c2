#pragma once

#include <cmath>

#include "gip/encoder.hpp"
#include "gip/graph.hpp"
#include "gip/tape.hpp"

namespace gip {

struct CompressionConfig {
    int num_blocks = 1;                    // L
    double ratio = 0.2;                    // q, cluster count per block = max(2, ceil(q*N))
    double delta1_rel = 0.05;              // edge threshold as a fraction of the max off-diagonal
    bool normalize_cluster_features = true;

    void validate() const {
        if (num_blocks < 1) throw ShapeError("compression: num_blocks must be >= 1");
        if (ratio <= 0.0 || ratio >= 1.0) throw ShapeError("compression: ratio must be in (0,1)");
        if (delta1_rel < 0.0) throw ShapeError("compression: delta1_rel must be >= 0");
    }

    int clusters_for(int n) const {
        return std::max(2, static_cast<int>(std::ceil(ratio * n)));
    }
};

/// Result of running the compression blocks over one graph. Values live on
/// the caller's tape.
struct CoarsenedGraph {
    Value features;                  // N^L x d'
    Value adjacency;                 // N^L x N^L, filtered, zero diagonal
    std::vector<Value> assignments;  // per-block S matrices
    Value loss_clu;                  // summed over blocks
    Value loss_bal;                  // summed over blocks

    AttributedGraph detach() const {
        return AttributedGraph{features.val(), adjacency.val(), std::nullopt};
    }
};

/// Per-block weights of the compression stack. Blocks after the first read
/// d'-dimensional coarsened features, so each block has its own encoder and
/// assignment head; the head is sized for the largest cluster count the
/// training set needs and sliced per graph.
struct CompressionBlockBinding {
    GcnBinding encoder;
    MlpBinding assign_mlp;
};

/// S = row-softmax of the first K columns of the assignment-head output.
Value assign_clusters(Tape& tape, Value embeddings, const MlpBinding& assign_mlp, int k);

/// Normalized-cut relaxation: mean over columns of (S_k^T L S_k)/(S_k^T D S_k + eps).
Value cluster_loss(Tape& tape, Value assignment, Value adjacency);

/// (sqrt(K)/N) * ||column sums of S||_2 - 1; zero at perfect balance.
Value balance_loss(Tape& tape, Value assignment);

/// X^l = S^T Z, A^l = S^T A S.
std::pair<Value, Value> coarsen_block(Tape& tape, Value embeddings, Value adjacency, Value assignment);

/// Zeroes the diagonal then drops entries not strictly above delta1. The
/// mask is constant in the backward pass (straight-through), so gradients
/// flow only through retained entries.
Value filter_edges(Tape& tape, Value adjacency, double delta1);

/// Full compression stack over one graph: per block normalize -> encode ->
/// assign -> coarsen, then edge filtering (and optional feature row
/// normalization) after the last block. Cluster losses accumulate by
/// summation across blocks.
CoarsenedGraph compress(Tape& tape, Value features, Value adjacency,
                        const std::vector<CompressionBlockBinding>& blocks,
                        const CompressionConfig& cfg);

}  // namespace gip
