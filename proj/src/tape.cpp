#include "gip/tape.hpp"

#include <cmath>

namespace gip {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Leaf: return "leaf";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "elementwise-mul";
        case OpKind::Div: return "elementwise-div";
        case OpKind::AddScalar: return "add-scalar";
        case OpKind::MulScalar: return "mul-scalar";
        case OpKind::RowSoftmax: return "row-softmax";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Relu: return "relu";
        case OpKind::Log: return "log";
        case OpKind::Exp: return "exp";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::Sum: return "sum";
        case OpKind::Trace: return "trace";
        case OpKind::FrobeniusNorm: return "frobenius-norm";
        case OpKind::ConcatRows: return "concat-rows";
        case OpKind::ConcatCols: return "concat-cols";
        case OpKind::Slice: return "slice";
        case OpKind::MaxWithScalar: return "max-with-scalar";
        case OpKind::Reshape: return "reshape";
        case OpKind::DiagPart: return "diag-part";
        case OpKind::Log1pSumExp: return "log1p-sum-exp";
    }
    return "?";
}

const Tensor& Value::val() const {
    if (!tape_) throw std::logic_error("Value: unbound handle");
    return tape_->value_of(node_);
}

void Tape::check_same_tape(Value v) const {
    if (v.tape() != this) throw std::logic_error("Value belongs to a different tape");
}

Value Tape::leaf(Tensor t, bool requires_grad) {
    if (!t.all_finite()) throw NonFiniteError("leaf tensor contains NaN/Inf");
    Node n;
    n.kind = OpKind::Leaf;
    n.value = std::move(t);
    n.needs_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Tape::push(OpKind kind, Tensor value, int a, int b, double s, std::array<int, 4> bounds) {
    if (!value.all_finite())
        throw NonFiniteError(std::string(op_name(kind)) + " produced a non-finite value");
    Node n;
    n.kind = kind;
    n.value = std::move(value);
    n.in = {a, b};
    n.scalar = s;
    n.bounds = bounds;
    n.needs_grad = (a >= 0 && nodes_[a].needs_grad) || (b >= 0 && nodes_[b].needs_grad);
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

namespace {

// Broadcast-aware elementwise combine: shapes equal, or either side 1x1.
enum class Bcast { None, Left, Right };

Bcast bcast_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.same_shape(b)) return Bcast::None;
    if (a.is_scalar()) return Bcast::Left;
    if (b.is_scalar()) return Bcast::Right;
    throw ShapeError(std::string(op) + ": lhs " + a.shape_str() + ", rhs " + b.shape_str());
}

template <typename F>
Tensor combine(const Tensor& a, const Tensor& b, Bcast bc, F f) {
    switch (bc) {
        case Bcast::None: {
            Tensor out(a.rows(), a.cols());
            for (int i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
            return out;
        }
        case Bcast::Left: {
            Tensor out(b.rows(), b.cols());
            for (int i = 0; i < b.size(); ++i) out[i] = f(a[0], b[i]);
            return out;
        }
        case Bcast::Right: {
            Tensor out(a.rows(), a.cols());
            for (int i = 0; i < a.size(); ++i) out[i] = f(a[i], b[0]);
            return out;
        }
    }
    return {};
}

}  // namespace

Value Tape::matmul(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    return push(OpKind::MatMul, matmul_plain(a.val(), b.val()), a.node(), b.node());
}

Value Tape::transpose(Value a) {
    check_same_tape(a);
    return push(OpKind::Transpose, a.val().transposed(), a.node(), -1);
}

Value Tape::add(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    Bcast bc = bcast_kind(a.val(), b.val(), "add");
    return push(OpKind::Add, combine(a.val(), b.val(), bc, [](double x, double y) { return x + y; }),
                a.node(), b.node());
}

Value Tape::sub(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    Bcast bc = bcast_kind(a.val(), b.val(), "sub");
    return push(OpKind::Sub, combine(a.val(), b.val(), bc, [](double x, double y) { return x - y; }),
                a.node(), b.node());
}

Value Tape::mul(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    Bcast bc = bcast_kind(a.val(), b.val(), "elementwise-mul");
    return push(OpKind::Mul, combine(a.val(), b.val(), bc, [](double x, double y) { return x * y; }),
                a.node(), b.node());
}

Value Tape::div(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    Bcast bc = bcast_kind(a.val(), b.val(), "elementwise-div");
    return push(OpKind::Div, combine(a.val(), b.val(), bc, [](double x, double y) { return x / y; }),
                a.node(), b.node());
}

Value Tape::add_scalar(Value a, double s) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x += s;
    return push(OpKind::AddScalar, std::move(out), a.node(), -1, s);
}

Value Tape::mul_scalar(Value a, double s) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x *= s;
    return push(OpKind::MulScalar, std::move(out), a.node(), -1, s);
}

Value Tape::row_softmax(Value a) {
    check_same_tape(a);
    const Tensor& x = a.val();
    Tensor out(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) {
        double m = x.at(i, 0);
        for (int j = 1; j < x.cols(); ++j) m = std::max(m, x.at(i, j));
        double z = 0.0;
        for (int j = 0; j < x.cols(); ++j) z += std::exp(x.at(i, j) - m);
        for (int j = 0; j < x.cols(); ++j) out.at(i, j) = std::exp(x.at(i, j) - m) / z;
    }
    return push(OpKind::RowSoftmax, std::move(out), a.node(), -1);
}

Value Tape::sigmoid(Value a) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x = 1.0 / (1.0 + std::exp(-x));
    return push(OpKind::Sigmoid, std::move(out), a.node(), -1);
}

Value Tape::relu(Value a) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
    return push(OpKind::Relu, std::move(out), a.node(), -1);
}

Value Tape::log(Value a) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x = std::log(x);
    return push(OpKind::Log, std::move(out), a.node(), -1);
}

Value Tape::exp(Value a) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x = std::exp(x);
    return push(OpKind::Exp, std::move(out), a.node(), -1);
}

Value Tape::sqrt(Value a) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x = std::sqrt(x);
    return push(OpKind::Sqrt, std::move(out), a.node(), -1);
}

Value Tape::sum(Value a) {
    check_same_tape(a);
    double s = 0.0;
    for (double v : a.val().data()) s += v;
    return push(OpKind::Sum, Tensor::scalar(s), a.node(), -1);
}

Value Tape::trace(Value a) {
    check_same_tape(a);
    const Tensor& x = a.val();
    if (x.rows() != x.cols()) throw ShapeError("trace: tensor is " + x.shape_str() + ", expected square");
    double s = 0.0;
    for (int i = 0; i < x.rows(); ++i) s += x.at(i, i);
    return push(OpKind::Trace, Tensor::scalar(s), a.node(), -1);
}

Value Tape::frobenius_norm(Value a) {
    check_same_tape(a);
    double s = 0.0;
    for (double v : a.val().data()) s += v * v;
    return push(OpKind::FrobeniusNorm, Tensor::scalar(std::sqrt(s)), a.node(), -1);
}

Value Tape::concat_rows(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor &x = a.val(), &y = b.val();
    if (x.cols() != y.cols())
        throw ShapeError("concat-rows: lhs " + x.shape_str() + ", rhs " + y.shape_str());
    Tensor out(x.rows() + y.rows(), x.cols());
    std::copy(x.data().begin(), x.data().end(), out.data().begin());
    std::copy(y.data().begin(), y.data().end(), out.data().begin() + x.size());
    return push(OpKind::ConcatRows, std::move(out), a.node(), b.node());
}

Value Tape::concat_cols(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor &x = a.val(), &y = b.val();
    if (x.rows() != y.rows())
        throw ShapeError("concat-cols: lhs " + x.shape_str() + ", rhs " + y.shape_str());
    Tensor out(x.rows(), x.cols() + y.cols());
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j);
        for (int j = 0; j < y.cols(); ++j) out.at(i, x.cols() + j) = y.at(i, j);
    }
    return push(OpKind::ConcatCols, std::move(out), a.node(), b.node());
}

Value Tape::slice(Value a, int r0, int r1, int c0, int c1) {
    check_same_tape(a);
    const Tensor& x = a.val();
    if (r0 < 0 || c0 < 0 || r1 > x.rows() || c1 > x.cols() || r0 >= r1 || c0 >= c1)
        throw ShapeError("slice: bounds [" + std::to_string(r0) + "," + std::to_string(r1) + ")x[" +
                         std::to_string(c0) + "," + std::to_string(c1) + ") of " + x.shape_str());
    Tensor out(r1 - r0, c1 - c0);
    for (int i = r0; i < r1; ++i)
        for (int j = c0; j < c1; ++j) out.at(i - r0, j - c0) = x.at(i, j);
    return push(OpKind::Slice, std::move(out), a.node(), -1, 0.0, {r0, r1, c0, c1});
}

Value Tape::max_with_scalar(Value a, double s) {
    check_same_tape(a);
    Tensor out = a.val();
    for (double& x : out.data()) x = x > s ? x : s;
    return push(OpKind::MaxWithScalar, std::move(out), a.node(), -1, s);
}

Value Tape::reshape(Value a, int rows, int cols) {
    check_same_tape(a);
    const Tensor& x = a.val();
    if (rows * cols != x.size())
        throw ShapeError("reshape: " + x.shape_str() + " -> " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    Tensor out(rows, cols, x.data());
    return push(OpKind::Reshape, std::move(out), a.node(), -1, 0.0, {x.rows(), x.cols(), 0, 0});
}

Value Tape::diag_part(Value a) {
    check_same_tape(a);
    const Tensor& x = a.val();
    if (x.rows() != x.cols()) throw ShapeError("diag-part: tensor is " + x.shape_str() + ", expected square");
    Tensor out(x.rows(), 1);
    for (int i = 0; i < x.rows(); ++i) out.at(i, 0) = x.at(i, i);
    return push(OpKind::DiagPart, std::move(out), a.node(), -1);
}

Value Tape::log1p_sum_exp(Value a) {
    check_same_tape(a);
    const Tensor& x = a.val();
    double m = 0.0;  // include the implicit exp(0) = 1 term
    for (double v : x.data()) m = std::max(m, v);
    double z = std::exp(-m);
    for (double v : x.data()) z += std::exp(v - m);
    return push(OpKind::Log1pSumExp, Tensor::scalar(m + std::log(z)), a.node(), -1);
}

void Tape::accumulate(int node, const Tensor& g) {
    if (!nodes_[node].needs_grad) return;
    if (!grad_set_[node]) {
        grads_[node] = g;
        grad_set_[node] = 1;
    } else {
        Tensor& acc = grads_[node];
        for (int i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
}

void Tape::backward(Value output) {
    check_same_tape(output);
    if (!output.val().is_scalar())
        throw ShapeError("backward: output is " + output.val().shape_str() + ", expected 1x1");

    grads_.assign(nodes_.size(), Tensor());
    grad_set_.assign(nodes_.size(), 0);
    if (!nodes_[output.node()].needs_grad) return;  // no parameters reachable
    grads_[output.node()] = Tensor::scalar(1.0);
    grad_set_[output.node()] = 1;

    for (int idx = output.node(); idx >= 0; --idx) {
        if (!grad_set_[idx] || !nodes_[idx].needs_grad) continue;
        const Node& n = nodes_[idx];
        const Tensor& g = grads_[idx];
        switch (n.kind) {
            case OpKind::Leaf:
                break;
            case OpKind::MatMul: {
                const Tensor &a = in_val(n, 0), &b = in_val(n, 1);
                if (nodes_[n.in[0]].needs_grad) accumulate(n.in[0], matmul_plain(g, b.transposed()));
                if (nodes_[n.in[1]].needs_grad) accumulate(n.in[1], matmul_plain(a.transposed(), g));
                break;
            }
            case OpKind::Transpose:
                accumulate(n.in[0], g.transposed());
                break;
            case OpKind::Add:
            case OpKind::Sub: {
                const double sign = n.kind == OpKind::Sub ? -1.0 : 1.0;
                const Tensor &a = in_val(n, 0), &b = in_val(n, 1);
                if (nodes_[n.in[0]].needs_grad) {
                    if (a.same_shape(g)) {
                        accumulate(n.in[0], g);
                    } else {  // a is 1x1
                        double s = 0.0;
                        for (double v : g.data()) s += v;
                        accumulate(n.in[0], Tensor::scalar(s));
                    }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    if (b.same_shape(g)) {
                        Tensor gb = g;
                        for (double& v : gb.data()) v *= sign;
                        accumulate(n.in[1], gb);
                    } else {
                        double s = 0.0;
                        for (double v : g.data()) s += v;
                        accumulate(n.in[1], Tensor::scalar(sign * s));
                    }
                }
                break;
            }
            case OpKind::Mul: {
                const Tensor &a = in_val(n, 0), &b = in_val(n, 1);
                if (nodes_[n.in[0]].needs_grad) {
                    if (a.same_shape(g)) {
                        Tensor ga(g.rows(), g.cols());
                        for (int i = 0; i < g.size(); ++i) ga[i] = g[i] * (b.is_scalar() ? b[0] : b[i]);
                        accumulate(n.in[0], ga);
                    } else {
                        double s = 0.0;
                        for (int i = 0; i < g.size(); ++i) s += g[i] * b[i];
                        accumulate(n.in[0], Tensor::scalar(s));
                    }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    if (b.same_shape(g)) {
                        Tensor gb(g.rows(), g.cols());
                        for (int i = 0; i < g.size(); ++i) gb[i] = g[i] * (a.is_scalar() ? a[0] : a[i]);
                        accumulate(n.in[1], gb);
                    } else {
                        double s = 0.0;
                        for (int i = 0; i < g.size(); ++i) s += g[i] * a[i];
                        accumulate(n.in[1], Tensor::scalar(s));
                    }
                }
                break;
            }
            case OpKind::Div: {
                const Tensor &a = in_val(n, 0), &b = in_val(n, 1);
                if (nodes_[n.in[0]].needs_grad) {
                    if (a.same_shape(g)) {
                        Tensor ga(g.rows(), g.cols());
                        for (int i = 0; i < g.size(); ++i) ga[i] = g[i] / (b.is_scalar() ? b[0] : b[i]);
                        accumulate(n.in[0], ga);
                    } else {
                        double s = 0.0;
                        for (int i = 0; i < g.size(); ++i) s += g[i] / b[i];
                        accumulate(n.in[0], Tensor::scalar(s));
                    }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    if (b.same_shape(g)) {
                        Tensor gb(g.rows(), g.cols());
                        for (int i = 0; i < g.size(); ++i) {
                            const double av = a.is_scalar() ? a[0] : a[i];
                            gb[i] = -g[i] * av / (b[i] * b[i]);
                        }
                        accumulate(n.in[1], gb);
                    } else {
                        double s = 0.0;
                        for (int i = 0; i < g.size(); ++i) s += -g[i] * a[i] / (b[0] * b[0]);
                        accumulate(n.in[1], Tensor::scalar(s));
                    }
                }
                break;
            }
            case OpKind::AddScalar:
                accumulate(n.in[0], g);
                break;
            case OpKind::MulScalar: {
                Tensor ga = g;
                for (double& v : ga.data()) v *= n.scalar;
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::RowSoftmax: {
                const Tensor& s = n.value;
                Tensor ga(s.rows(), s.cols());
                for (int i = 0; i < s.rows(); ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < s.cols(); ++j) dot += g.at(i, j) * s.at(i, j);
                    for (int j = 0; j < s.cols(); ++j) ga.at(i, j) = s.at(i, j) * (g.at(i, j) - dot);
                }
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Sigmoid: {
                const Tensor& s = n.value;
                Tensor ga(s.rows(), s.cols());
                for (int i = 0; i < s.size(); ++i) ga[i] = g[i] * s[i] * (1.0 - s[i]);
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Relu: {
                const Tensor& x = in_val(n, 0);
                Tensor ga(x.rows(), x.cols());
                for (int i = 0; i < x.size(); ++i) ga[i] = x[i] > 0.0 ? g[i] : 0.0;
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Log: {
                const Tensor& x = in_val(n, 0);
                Tensor ga(x.rows(), x.cols());
                for (int i = 0; i < x.size(); ++i) ga[i] = g[i] / x[i];
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Exp: {
                const Tensor& e = n.value;
                Tensor ga(e.rows(), e.cols());
                for (int i = 0; i < e.size(); ++i) ga[i] = g[i] * e[i];
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Sqrt: {
                const Tensor& r = n.value;
                Tensor ga(r.rows(), r.cols());
                for (int i = 0; i < r.size(); ++i) ga[i] = r[i] > 0.0 ? g[i] / (2.0 * r[i]) : 0.0;
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Sum: {
                const Tensor& x = in_val(n, 0);
                accumulate(n.in[0], Tensor::full(x.rows(), x.cols(), g[0]));
                break;
            }
            case OpKind::Trace: {
                const Tensor& x = in_val(n, 0);
                Tensor ga(x.rows(), x.cols());
                for (int i = 0; i < x.rows(); ++i) ga.at(i, i) = g[0];
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::FrobeniusNorm: {
                const Tensor& x = in_val(n, 0);
                const double f = n.value[0];
                Tensor ga(x.rows(), x.cols());
                if (f > 0.0)
                    for (int i = 0; i < x.size(); ++i) ga[i] = g[0] * x[i] / f;
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::ConcatRows: {
                const Tensor &a = in_val(n, 0), &b = in_val(n, 1);
                if (nodes_[n.in[0]].needs_grad) {
                    Tensor ga(a.rows(), a.cols());
                    std::copy(g.data().begin(), g.data().begin() + a.size(), ga.data().begin());
                    accumulate(n.in[0], ga);
                }
                if (nodes_[n.in[1]].needs_grad) {
                    Tensor gb(b.rows(), b.cols());
                    std::copy(g.data().begin() + a.size(), g.data().end(), gb.data().begin());
                    accumulate(n.in[1], gb);
                }
                break;
            }
            case OpKind::ConcatCols: {
                const Tensor &a = in_val(n, 0), &b = in_val(n, 1);
                if (nodes_[n.in[0]].needs_grad) {
                    Tensor ga(a.rows(), a.cols());
                    for (int i = 0; i < a.rows(); ++i)
                        for (int j = 0; j < a.cols(); ++j) ga.at(i, j) = g.at(i, j);
                    accumulate(n.in[0], ga);
                }
                if (nodes_[n.in[1]].needs_grad) {
                    Tensor gb(b.rows(), b.cols());
                    for (int i = 0; i < b.rows(); ++i)
                        for (int j = 0; j < b.cols(); ++j) gb.at(i, j) = g.at(i, a.cols() + j);
                    accumulate(n.in[1], gb);
                }
                break;
            }
            case OpKind::Slice: {
                const Tensor& x = in_val(n, 0);
                Tensor ga(x.rows(), x.cols());
                for (int i = n.bounds[0]; i < n.bounds[1]; ++i)
                    for (int j = n.bounds[2]; j < n.bounds[3]; ++j)
                        ga.at(i, j) = g.at(i - n.bounds[0], j - n.bounds[2]);
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::MaxWithScalar: {
                const Tensor& x = in_val(n, 0);
                Tensor ga(x.rows(), x.cols());
                for (int i = 0; i < x.size(); ++i) ga[i] = x[i] > n.scalar ? g[i] : 0.0;
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Reshape: {
                Tensor ga(n.bounds[0], n.bounds[1], g.data());
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::DiagPart: {
                const Tensor& x = in_val(n, 0);
                Tensor ga(x.rows(), x.cols());
                for (int i = 0; i < x.rows(); ++i) ga.at(i, i) = g.at(i, 0);
                accumulate(n.in[0], ga);
                break;
            }
            case OpKind::Log1pSumExp: {
                const Tensor& x = in_val(n, 0);
                const double lse = n.value[0];
                Tensor ga(x.rows(), x.cols());
                for (int i = 0; i < x.size(); ++i) ga[i] = g[0] * std::exp(x[i] - lse);
                accumulate(n.in[0], ga);
                break;
            }
        }
    }
}

Tensor Tape::grad(Value v) const {
    check_same_tape(v);
    if (grad_set_.size() == nodes_.size() && grad_set_[v.node()]) return grads_[v.node()];
    const Tensor& t = v.val();
    return Tensor::zeros(t.rows(), t.cols());
}

}  // namespace gip
