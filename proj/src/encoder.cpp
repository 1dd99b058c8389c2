#include "gip/encoder.hpp"

#include <cmath>

namespace gip {

namespace {

Tensor glorot_tensor(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Tensor t(rows, cols);
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

GcnParams GcnParams::glorot(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw ShapeError("GcnParams: need at least one layer");
    GcnParams p;
    for (size_t i = 0; i + 1 < dims.size(); ++i)
        p.weights.push_back(glorot_tensor(dims[i], dims[i + 1], rng));
    return p;
}

MlpParams MlpParams::glorot(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw ShapeError("MlpParams: need at least one layer");
    MlpParams p;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        MlpParams::Layer layer;
        layer.weight = glorot_tensor(dims[i], dims[i + 1], rng);
        layer.bias = Tensor(1, dims[i + 1]);
        layer.act = i + 2 < dims.size() ? Activation::Relu : Activation::None;
        p.layers.push_back(std::move(layer));
    }
    return p;
}

GcnBinding bind(Tape& tape, const GcnParams& p, bool trainable) {
    GcnBinding b;
    for (const auto& w : p.weights) b.weights.push_back(trainable ? tape.param(w) : tape.constant(w));
    return b;
}

MlpBinding bind(Tape& tape, const MlpParams& p, bool trainable) {
    MlpBinding b;
    for (const auto& l : p.layers) {
        MlpBinding::Layer layer;
        layer.weight = trainable ? tape.param(l.weight) : tape.constant(l.weight);
        layer.bias = trainable ? tape.param(l.bias) : tape.constant(l.bias);
        layer.act = l.act;
        b.layers.push_back(layer);
    }
    return b;
}

Value gcn_forward(Tape& tape, Value features, Value norm_adjacency, const GcnBinding& params) {
    if (params.weights.empty()) throw ShapeError("gcn_forward: no layers");
    if (features.cols() != params.weights.front().rows())
        throw ShapeError("gcn_forward: features " + features.val().shape_str() + " vs first weight " +
                         params.weights.front().val().shape_str());
    Value h = features;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        h = tape.matmul(tape.matmul(norm_adjacency, h), params.weights[l]);
        if (l + 1 < params.weights.size()) h = tape.relu(h);
    }
    return h;
}

Value mlp_forward(Tape& tape, Value input, const MlpBinding& params) {
    if (params.layers.empty()) throw ShapeError("mlp_forward: no layers");
    if (input.cols() != params.layers.front().weight.rows())
        throw ShapeError("mlp_forward: input " + input.val().shape_str() + " vs first weight " +
                         params.layers.front().weight.val().shape_str());
    Value h = input;
    Value ones_col = tape.constant(Tensor::ones(input.rows(), 1));
    for (const auto& layer : params.layers) {
        Value bias_rows = tape.matmul(ones_col, layer.bias);  // broadcast bias over rows
        h = tape.add(tape.matmul(h, layer.weight), bias_rows);
        if (layer.act == Activation::Relu) h = tape.relu(h);
    }
    return h;
}

Value normalize_adjacency_t(Tape& tape, Value adjacency) {
    const int n = adjacency.rows();
    if (adjacency.cols() != n)
        throw ShapeError("normalize_adjacency: adjacency is " + adjacency.val().shape_str());
    Value a_hat = tape.add(adjacency, tape.constant(Tensor::identity(n)));
    Value deg = tape.matmul(a_hat, tape.constant(Tensor::ones(n, 1)));              // N x 1
    Value dinv_sqrt = tape.div(tape.constant(Tensor::ones(n, 1)), tape.sqrt(deg));  // N x 1
    Value scale = tape.matmul(dinv_sqrt, tape.transpose(dinv_sqrt));                // N x N
    return tape.mul(a_hat, scale);
}

Value row_l2_normalize(Tape& tape, Value x) {
    const int d = x.cols();
    Value sq = tape.mul(x, x);
    Value row_sums = tape.matmul(sq, tape.constant(Tensor::ones(d, 1)));  // N x 1
    Value norms = tape.sqrt(tape.add_scalar(row_sums, 1e-12));
    Value tiled = tape.matmul(norms, tape.constant(Tensor::ones(1, d)));  // N x d
    return tape.div(x, tiled);
}

}  // namespace gip
