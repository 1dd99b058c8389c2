#pragma once

#include <array>
#include <vector>

#include "gip/tensor.hpp"

namespace gip {

class Tape;

/// Handle to a node recorded on a tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Value {
public:
    Value() = default;

    const Tensor& val() const;
    int rows() const { return val().rows(); }
    int cols() const { return val().cols(); }
    double item() const { return val().item(); }
    Tape* tape() const { return tape_; }
    int node() const { return node_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Value(Tape* t, int n) : tape_(t), node_(n) {}
    Tape* tape_ = nullptr;
    int node_ = -1;
};

enum class OpKind {
    Leaf,
    MatMul,
    Transpose,
    Add,
    Sub,
    Mul,          // elementwise; 1x1 broadcast on either side
    Div,          // elementwise; 1x1 broadcast on either side
    AddScalar,
    MulScalar,
    RowSoftmax,
    Sigmoid,
    Relu,
    Log,
    Exp,
    Sqrt,
    Sum,
    Trace,
    FrobeniusNorm,
    ConcatRows,
    ConcatCols,
    Slice,
    MaxWithScalar,
    Reshape,
    DiagPart,
    Log1pSumExp,  // log(1 + sum_i exp(a_i)), numerically stable
};

const char* op_name(OpKind k);

/// Records a dense-matrix computation and replays it in reverse for
/// gradients. Single-threaded; distinct tapes may run on distinct threads.
/// Node values are immutable once recorded. Every forward result is checked
/// for NaN/Inf and rejected with NonFiniteError.
///
/// Subgradient convention at non-differentiable points: relu at 0,
/// max-with-scalar at the threshold, sqrt/frobenius-norm at 0 all take
/// subgradient 0.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that will receive a gradient.
    Value param(Tensor t) { return leaf(std::move(t), true); }
    /// Leaf excluded from gradient propagation.
    Value constant(Tensor t) { return leaf(std::move(t), false); }
    Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }

    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value div(Value a, Value b);
    Value add_scalar(Value a, double s);
    Value mul_scalar(Value a, double s);
    Value row_softmax(Value a);
    Value sigmoid(Value a);
    Value relu(Value a);
    Value log(Value a);
    Value exp(Value a);
    Value sqrt(Value a);
    Value sum(Value a);
    Value trace(Value a);
    Value frobenius_norm(Value a);
    Value concat_rows(Value a, Value b);
    Value concat_cols(Value a, Value b);
    Value slice(Value a, int r0, int r1, int c0, int c1);  // half-open ranges
    Value max_with_scalar(Value a, double s);
    Value reshape(Value a, int rows, int cols);
    Value diag_part(Value a);
    Value log1p_sum_exp(Value a);

    /// Reverse pass from a 1x1 output. Seeds the adjoint with 1.0,
    /// accumulates by addition on fan-out; deterministic (fixed node order).
    void backward(Value output);

    /// Adjoint of a node after backward(); zero tensor if unreachable.
    Tensor grad(Value v) const;

    const Tensor& value_of(int node) const { return nodes_[node].value; }
    size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        OpKind kind = OpKind::Leaf;
        Tensor value;
        std::array<int, 2> in{-1, -1};
        double scalar = 0.0;
        std::array<int, 4> bounds{0, 0, 0, 0};  // slice: r0,r1,c0,c1; reshape: old dims
        bool needs_grad = false;
    };

    Value leaf(Tensor t, bool requires_grad);
    Value push(OpKind kind, Tensor value, int a, int b, double s = 0.0,
               std::array<int, 4> bounds = {0, 0, 0, 0});
    void check_same_tape(Value v) const;
    const Tensor& in_val(const Node& n, int slot) const { return nodes_[n.in[slot]].value; }
    void accumulate(int node, const Tensor& g);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<char> grad_set_;
};

}  // namespace gip
