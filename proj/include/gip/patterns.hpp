#pragma once

#include "gip/encoder.hpp"
#include "gip/kernel.hpp"

namespace gip {

struct PatternConfig {
    int per_class = 4;      // T/C
    int nodes = 0;          // n_p; 0 derives max(2, ceil(q^L * avg N)) from the dataset
    bool random_init = false;
    double init_noise = 0.1;
    double gamma1 = 2.0;
    double gamma2 = 50.0;
    double margin = 1.0;   // lambda
    double delta2 = 0.5;   // intra-class similarity threshold
    bool diversity_raw_kernel = false;  // hinge on raw kernel instead of normalized similarity

    void validate() const {
        if (per_class < 1) throw ShapeError("patterns: per_class must be >= 1");
        if (gamma1 <= 0.0 || gamma2 <= 0.0 || margin <= 0.0)
            throw ShapeError("patterns: gamma1, gamma2 and margin must be positive");
        if (delta2 < 0.0) throw ShapeError("patterns: delta2 must be >= 0");
    }
};

/// Learnable prototype features, one matrix per pattern; topology is
/// regenerated from them every forward pass.
struct PatternBankParams {
    std::vector<Tensor> features;  // T entries, each n_p x d'
    std::vector<int> class_of;     // T entries, evenly allocated over classes

    int size() const { return static_cast<int>(features.size()); }
};

/// Tape-bound bank: features plus generated adjacency per pattern.
struct PatternBankBinding {
    std::vector<GraphValue> patterns;
    std::vector<int> class_of;
    int size() const { return static_cast<int>(patterns.size()); }
};

/// A^P from pattern features: sigmoid of the symmetrized pairwise MLP score,
/// diagonal forced to zero.
Value generate_pattern_adjacency(Tape& tape, Value pattern_features, const MlpBinding& topology_mlp);

/// Binds every pattern and generates its adjacency.
PatternBankBinding bind_patterns(Tape& tape, const PatternBankParams& bank,
                                 const MlpBinding& topology_mlp, bool trainable);

/// Raw kernel value against every pattern, in bank order.
std::vector<Value> pattern_similarities(Tape& tape, const GraphValue& coarse,
                                        const PatternBankBinding& bank, const KernelConfig& cfg);

/// Multi-similarity term for one instance given its kernel distances to all
/// patterns: (1/g1) log(1 + sum_{pos} e^{g1 (d - margin)})
///         + (1/g2) log(1 + sum_{neg} e^{-g2 (d - margin)}).
Value multi_similarity_term(Tape& tape, const std::vector<Value>& distances, int label,
                            const std::vector<int>& class_of, const PatternConfig& cfg);

/// Batch mean of the per-instance terms.
Value multi_similarity_loss(Tape& tape, const std::vector<std::vector<Value>>& distances,
                            const std::vector<int>& labels, const std::vector<int>& class_of,
                            const PatternConfig& cfg);

/// Hinge on intra-class pattern closeness, unordered pairs counted once:
/// sum_c sum_{i<j in class c} max(0, sim(P_i, P_j) - delta2).
Value diversity_loss(Tape& tape, const PatternBankBinding& bank, const KernelConfig& kernel_cfg,
                     const PatternConfig& cfg);

}  // namespace gip
