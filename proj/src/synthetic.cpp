#include "gip/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace gip {

namespace {

const char* kCycleLayouts[2] = {"tree", "cycle"};  // class 0, class 1
const char* kFiveLayouts[5] = {"wheel", "grid", "tree", "ladder", "star"};

struct PendingGraph {
    std::vector<std::pair<int, int>> edges;
    int num_nodes = 0;
    SuperGraphInfo info;
    int label = 0;
};

PendingGraph build_graph(const std::string& layout, int label, const SyntheticConfig& cfg, Rng& rng) {
    PendingGraph out;
    out.label = label;
    out.info.layout = layout;

    const int k = static_cast<int>(rng.uniform_int(cfg.communities_min, cfg.communities_max));
    out.info.num_communities = k;

    std::vector<int> first(k), size(k);
    int total = 0;
    for (int c = 0; c < k; ++c) {
        size[c] = static_cast<int>(rng.uniform_int(cfg.community_size_min, cfg.community_size_max));
        first[c] = total;
        total += size[c];
    }
    out.num_nodes = total;
    out.info.community_of.resize(total);
    for (int c = 0; c < k; ++c)
        for (int i = 0; i < size[c]; ++i) out.info.community_of[first[c] + i] = c;

    for (int c = 0; c < k; ++c) {
        Tensor adj = barabasi_albert(size[c], cfg.ba_attachment, rng);
        for (int i = 0; i < size[c]; ++i)
            for (int j = i + 1; j < size[c]; ++j)
                if (adj.at(i, j) > 0.0) out.edges.emplace_back(first[c] + i, first[c] + j);
    }

    out.info.super_edges = layout_edges(layout, k, rng);
    const double wire_prob = rng.uniform(cfg.wire_prob_min, cfg.wire_prob_max);
    for (auto [ca, cb] : out.info.super_edges) {
        // pick port nodes on each side
        auto pick_ports = [&](int c) {
            std::vector<int> ports;
            const int want = std::min(cfg.ports_per_side, size[c]);
            while (static_cast<int>(ports.size()) < want) {
                const int cand = first[c] + static_cast<int>(rng.uniform_int(0, size[c] - 1));
                if (std::find(ports.begin(), ports.end(), cand) == ports.end()) ports.push_back(cand);
            }
            return ports;
        };
        const auto pa = pick_ports(ca);
        const auto pb = pick_ports(cb);
        bool any = false;
        for (int u : pa)
            for (int v : pb)
                if (rng.uniform() < wire_prob) {
                    out.edges.emplace_back(u, v);
                    any = true;
                }
        // a super-edge must be realized by at least one wire, otherwise the
        // stored ground truth would describe a structure the graph lacks
        if (!any) {
            const int u = pa[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pa.size()) - 1))];
            const int v = pb[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pb.size()) - 1))];
            out.edges.emplace_back(u, v);
        }
    }
    return out;
}

GraphDataset assemble(const std::string& name, std::vector<PendingGraph> pending, int num_classes,
                      const SyntheticConfig& cfg) {
    GraphDataset ds;
    ds.name = name;
    ds.num_classes = num_classes;

    int max_deg = 0;
    std::vector<std::vector<int>> degrees(pending.size());
    for (size_t g = 0; g < pending.size(); ++g) {
        degrees[g].assign(pending[g].num_nodes, 0);
        for (auto [u, v] : pending[g].edges) {
            degrees[g][u] += 1;
            degrees[g][v] += 1;
        }
        for (int d : degrees[g]) max_deg = std::max(max_deg, std::min(d, cfg.degree_onehot_cap));
    }
    ds.feature_dim = max_deg + 1;

    ds.graphs.resize(pending.size());
    ds.super_graphs.resize(pending.size());
    for (size_t g = 0; g < pending.size(); ++g) {
        auto& graph = ds.graphs[g];
        const int n = pending[g].num_nodes;
        graph.adjacency = Tensor(n, n);
        for (auto [u, v] : pending[g].edges) {
            graph.adjacency.at(u, v) = 1.0;
            graph.adjacency.at(v, u) = 1.0;
        }
        graph.features = Tensor(n, ds.feature_dim);
        for (int i = 0; i < n; ++i)
            graph.features.at(i, std::min(degrees[g][i], cfg.degree_onehot_cap)) = 1.0;
        graph.label = pending[g].label;
        ds.super_graphs[g] = std::move(pending[g].info);
        graph.validate();
    }
    ds.validate();
    return ds;
}

GraphDataset generate_layout_dataset(const std::string& name, int n_graphs, uint64_t seed,
                                     const SyntheticConfig& cfg, const char* const* layouts,
                                     int num_classes) {
    if (n_graphs < 2) throw DataError(name + ": need at least 2 graphs");
    Rng master(seed);
    std::vector<PendingGraph> pending;
    pending.reserve(n_graphs);
    for (int g = 0; g < n_graphs; ++g) {
        const int label = g % num_classes;  // balanced classes
        Rng local = master.fork(static_cast<uint64_t>(g));
        pending.push_back(build_graph(layouts[label], label, cfg, local));
    }
    return assemble(name, std::move(pending), num_classes, cfg);
}

}  // namespace

Tensor barabasi_albert(int n, int m, Rng& rng) {
    if (n < 1) throw DataError("barabasi_albert: n must be positive");
    Tensor adj(n, n);
    if (n == 1) return adj;
    const int m_eff = std::min(m, n - 1);
    // repeated-node list: each endpoint appears once per incident edge
    std::vector<int> repeated;
    auto add_edge = [&](int u, int v) {
        adj.at(u, v) = 1.0;
        adj.at(v, u) = 1.0;
        repeated.push_back(u);
        repeated.push_back(v);
    };
    // seed clique over the first m_eff+1 nodes keeps small communities connected
    for (int i = 0; i <= m_eff && i < n; ++i)
        for (int j = i + 1; j <= m_eff && j < n; ++j) add_edge(i, j);
    for (int t = m_eff + 1; t < n; ++t) {
        std::vector<int> targets;
        while (static_cast<int>(targets.size()) < m_eff) {
            const int cand = repeated[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int64_t>(repeated.size()) - 1))];
            if (std::find(targets.begin(), targets.end(), cand) == targets.end())
                targets.push_back(cand);
        }
        for (int u : targets) add_edge(t, u);
    }
    return adj;
}

std::vector<std::pair<int, int>> layout_edges(const std::string& layout, int k, Rng& rng) {
    std::vector<std::pair<int, int>> edges;
    if (k < 1) throw DataError("layout_edges: k must be positive");
    if (layout == "cycle") {
        if (k < 3) throw DataError("cycle layout needs at least 3 communities");
        for (int i = 0; i < k; ++i) edges.emplace_back(i, (i + 1) % k);
    } else if (layout == "tree") {
        // uniform random recursive tree
        for (int i = 1; i < k; ++i)
            edges.emplace_back(static_cast<int>(rng.uniform_int(0, i - 1)), i);
    } else if (layout == "wheel") {
        if (k < 4) throw DataError("wheel layout needs at least 4 communities");
        for (int i = 1; i < k; ++i) {
            edges.emplace_back(0, i);
            edges.emplace_back(i, i == k - 1 ? 1 : i + 1);
        }
    } else if (layout == "grid") {
        const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(k)))));
        const int cols = (k + rows - 1) / rows;
        auto id = [&](int r, int c) { return r * cols + c; };
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                if (id(r, c) >= k) continue;
                if (c + 1 < cols && id(r, c + 1) < k) edges.emplace_back(id(r, c), id(r, c + 1));
                if (r + 1 < rows && id(r + 1, c) < k) edges.emplace_back(id(r, c), id(r + 1, c));
            }
    } else if (layout == "ladder") {
        const int rungs = k / 2;
        for (int i = 0; i + 1 < rungs; ++i) {
            edges.emplace_back(i, i + 1);                  // left rail
            edges.emplace_back(rungs + i, rungs + i + 1);  // right rail
        }
        for (int i = 0; i < rungs; ++i) edges.emplace_back(i, rungs + i);
        if (k % 2 == 1) edges.emplace_back(k - 2, k - 1);  // odd leftover hangs off the end
    } else if (layout == "star") {
        for (int i = 1; i < k; ++i) edges.emplace_back(0, i);
    } else {
        throw DataError("unknown layout: " + layout);
    }
    return edges;
}

AttributedGraph canonical_motif(const std::string& layout, int k) {
    if (layout == "tree") {
        // balanced binary tree as the deterministic representative
        std::vector<std::pair<int, int>> edges;
        for (int i = 1; i < k; ++i) edges.emplace_back((i - 1) / 2, i);
        return graph_from_edges(k, edges);
    }
    Rng unused(0);
    return graph_from_edges(k, layout_edges(layout, k, unused));
}

GraphDataset generate_graphcycle(int n_graphs, uint64_t seed, const SyntheticConfig& cfg) {
    return generate_layout_dataset("GraphCycle", n_graphs, seed, cfg, kCycleLayouts, 2);
}

GraphDataset generate_graphfive(int n_graphs, uint64_t seed, const SyntheticConfig& cfg) {
    return generate_layout_dataset("GraphFive", n_graphs, seed, cfg, kFiveLayouts, 5);
}

}  // namespace gip
