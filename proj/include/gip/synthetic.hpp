#pragma once

#include "gip/graph.hpp"
#include "gip/rng.hpp"

namespace gip {

/// Knobs for the synthetic community-layout generators. Defaults follow the
/// full-scale setting; tests and the desk-scale runs shrink them.
struct SyntheticConfig {
    int communities_min = 8;
    int communities_max = 15;
    int community_size_min = 10;
    int community_size_max = 200;
    int ba_attachment = 2;       // preferential-attachment edges per new node
    double wire_prob_min = 0.05; // inter-community wiring probability range
    double wire_prob_max = 0.15;
    int ports_per_side = 3;      // nodes eligible for cross-community edges
    int degree_onehot_cap = 64;
};

/// Barabasi-Albert graph: n nodes, each new node attaches to `m` distinct
/// existing nodes with probability proportional to degree.
Tensor barabasi_albert(int n, int m, Rng& rng);

/// Two classes: communities arranged in a cycle (class 1) or a random
/// spanning tree (class 0).
GraphDataset generate_graphcycle(int n_graphs, uint64_t seed, const SyntheticConfig& cfg = {});

/// Five classes: wheel, grid, tree, ladder, star community layouts.
GraphDataset generate_graphfive(int n_graphs, uint64_t seed, const SyntheticConfig& cfg = {});

/// Community-level edge set for a named layout over k communities. Random
/// layouts (tree) draw from `rng`; deterministic ones ignore it.
std::vector<std::pair<int, int>> layout_edges(const std::string& layout, int k, Rng& rng);

/// Deterministic per-class reference motif used by the consistency metric:
/// the layout at the class's median community count with unit node features.
/// Random layouts use a canonical member (balanced binary tree for "tree").
AttributedGraph canonical_motif(const std::string& layout, int k);

}  // namespace gip
