#pragma once

#include <vector>

#include "gip/graph.hpp"
#include "gip/tape.hpp"

namespace gip {

/// Both self-kernels must be positive to normalize; raised otherwise.
struct ZeroSelfKernelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KernelConfig {
    int max_steps = 3;               // R
    std::vector<double> step_decay;  // mu_r per step; empty = all ones

    double decay(int r) const {
        if (step_decay.empty()) return 1.0;
        if (r >= static_cast<int>(step_decay.size()))
            throw ShapeError("kernel decay list shorter than R+1");
        return step_decay[r];
    }
};

/// On-tape graph: features N x d plus adjacency N x N. Carries whatever the
/// caller recorded (constants for data graphs, live values for coarsened
/// graphs and patterns).
struct GraphValue {
    Value features;
    Value adjacency;
};

/// R-step random walk kernel on the direct product graph, evaluated without
/// materializing the Kronecker adjacency: with M_0 = X' X^T the recursion
/// M_{r+1} = A' M_r A^T walks both graphs simultaneously and
/// K_r = sum(M_0 * M_r). Differentiable in both graphs' features and
/// adjacencies; cost O(R * N * N' * (N + N')).
Value rw_kernel(Tape& tape, const GraphValue& g, const GraphValue& h, const KernelConfig& cfg);

/// K(G,G') / sqrt(K(G,G) K(G',G')).
Value normalized_similarity(Tape& tape, const GraphValue& g, const GraphValue& h,
                            const KernelConfig& cfg);

/// sqrt(max(0, (K(G,G)+K(G',G'))/2 - K(G,G'))); the max guards round-off.
Value kernel_distance(Tape& tape, const GraphValue& g, const GraphValue& h, const KernelConfig& cfg);

// Plain-graph conveniences (record on a scratch tape internally).
double rw_kernel(const AttributedGraph& g, const AttributedGraph& h, const KernelConfig& cfg);
double normalized_similarity(const AttributedGraph& g, const AttributedGraph& h,
                             const KernelConfig& cfg);
double kernel_distance(const AttributedGraph& g, const AttributedGraph& h, const KernelConfig& cfg);

GraphValue as_constant(Tape& tape, const AttributedGraph& g);

}  // namespace gip
