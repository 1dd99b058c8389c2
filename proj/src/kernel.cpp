#include "gip/kernel.hpp"

namespace gip {

Value rw_kernel(Tape& tape, const GraphValue& g, const GraphValue& h, const KernelConfig& cfg) {
    if (g.features.cols() != h.features.cols())
        throw ShapeError("rw_kernel: feature dims " + g.features.val().shape_str() + " vs " +
                         h.features.val().shape_str());
    if (cfg.max_steps < 0) throw ShapeError("rw_kernel: R must be >= 0");

    // M0[(v',v)] = <X'_{v'}, X_v>: node-pair weights of the product graph
    Value m0 = tape.matmul(h.features, tape.transpose(g.features));  // N' x N
    Value acc = tape.mul_scalar(tape.sum(tape.mul(m0, m0)), cfg.decay(0));
    if (cfg.max_steps > 0) {
        Value a_t = tape.transpose(g.adjacency);
        Value m = m0;
        for (int r = 1; r <= cfg.max_steps; ++r) {
            m = tape.matmul(h.adjacency, tape.matmul(m, a_t));
            acc = tape.add(acc, tape.mul_scalar(tape.sum(tape.mul(m0, m)), cfg.decay(r)));
        }
    }
    return acc;
}

Value normalized_similarity(Tape& tape, const GraphValue& g, const GraphValue& h,
                            const KernelConfig& cfg) {
    Value kgh = rw_kernel(tape, g, h, cfg);
    Value kgg = rw_kernel(tape, g, g, cfg);
    Value khh = rw_kernel(tape, h, h, cfg);
    if (kgg.item() <= 0.0 || khh.item() <= 0.0)
        throw ZeroSelfKernelError("normalized_similarity: self-kernel is not positive (" +
                                  std::to_string(kgg.item()) + ", " + std::to_string(khh.item()) + ")");
    return tape.div(kgh, tape.sqrt(tape.mul(kgg, khh)));
}

Value kernel_distance(Tape& tape, const GraphValue& g, const GraphValue& h, const KernelConfig& cfg) {
    Value kgh = rw_kernel(tape, g, h, cfg);
    Value kgg = rw_kernel(tape, g, g, cfg);
    Value khh = rw_kernel(tape, h, h, cfg);
    Value gap = tape.sub(tape.mul_scalar(tape.add(kgg, khh), 0.5), kgh);
    return tape.sqrt(tape.max_with_scalar(gap, 0.0));
}

GraphValue as_constant(Tape& tape, const AttributedGraph& g) {
    return GraphValue{tape.constant(g.features), tape.constant(g.adjacency)};
}

double rw_kernel(const AttributedGraph& g, const AttributedGraph& h, const KernelConfig& cfg) {
    Tape tape;
    return rw_kernel(tape, as_constant(tape, g), as_constant(tape, h), cfg).item();
}

double normalized_similarity(const AttributedGraph& g, const AttributedGraph& h,
                             const KernelConfig& cfg) {
    Tape tape;
    return normalized_similarity(tape, as_constant(tape, g), as_constant(tape, h), cfg).item();
}

double kernel_distance(const AttributedGraph& g, const AttributedGraph& h, const KernelConfig& cfg) {
    Tape tape;
    return kernel_distance(tape, as_constant(tape, g), as_constant(tape, h), cfg).item();
}

}  // namespace gip
