#pragma once

#include <string>
#include <vector>

#include "gip/rng.hpp"
#include "gip/tape.hpp"

namespace gip {

/// GCN encoder weights, one matrix per layer (no biases).
struct GcnParams {
    std::vector<Tensor> weights;  // layer l: d_in x d_out

    static GcnParams glorot(const std::vector<int>& dims, Rng& rng);
    int in_dim() const { return weights.front().rows(); }
    int out_dim() const { return weights.back().cols(); }
};

enum class Activation { None, Relu };

/// Plain MLP: affine + activation per layer, last layer linear. Callers
/// apply softmax/sigmoid on top where needed.
struct MlpParams {
    struct Layer {
        Tensor weight;  // in x out
        Tensor bias;    // 1 x out
        Activation act = Activation::None;
    };
    std::vector<Layer> layers;

    static MlpParams glorot(const std::vector<int>& dims, Rng& rng);
    int in_dim() const { return layers.front().weight.rows(); }
    int out_dim() const { return layers.back().weight.cols(); }
};

/// Tape-bound handles to the encoder/MLP weights (parameters for training,
/// constants for evaluation).
struct GcnBinding {
    std::vector<Value> weights;
};
struct MlpBinding {
    struct Layer {
        Value weight, bias;
        Activation act;
    };
    std::vector<Layer> layers;
};

GcnBinding bind(Tape& tape, const GcnParams& p, bool trainable);
MlpBinding bind(Tape& tape, const MlpParams& p, bool trainable);

/// Z = relu(... relu(Ã X W0) ... W_{L-1}), final layer linear.
Value gcn_forward(Tape& tape, Value features, Value norm_adjacency, const GcnBinding& params);

Value mlp_forward(Tape& tape, Value input, const MlpBinding& params);

/// Differentiable D^{-1/2}(A+I)D^{-1/2} for on-tape adjacencies.
Value normalize_adjacency_t(Tape& tape, Value adjacency);

/// Rows scaled to unit L2 norm (eps-guarded for zero rows).
Value row_l2_normalize(Tape& tape, Value x);

}  // namespace gip
