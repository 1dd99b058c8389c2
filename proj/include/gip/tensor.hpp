#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace gip {

/// Shape/argument violation; message carries both offending shapes.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A forward op produced NaN or Inf.
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of 64-bit floats. The only numeric carrier in the
/// library; immutable once recorded on a tape.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        check_dims(rows, cols);
    }
    Tensor(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        check_dims(rows, cols);
        if (data_.size() != static_cast<size_t>(rows) * cols)
            throw ShapeError("Tensor: data length " + std::to_string(data_.size()) + " != " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
    static Tensor ones(int rows, int cols);
    static Tensor full(int rows, int cols, double v);
    static Tensor identity(int n);
    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
    static Tensor from(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }

    double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](int i) { return data_[i]; }
    double operator[](int i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
    std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

    double item() const {
        if (!is_scalar()) throw ShapeError("item: tensor is " + shape_str() + ", expected 1x1");
        return data_[0];
    }

    Tensor transposed() const;
    double max_abs() const;

private:
    static void check_dims(int rows, int cols) {
        if (rows <= 0 || cols <= 0)
            throw ShapeError("Tensor: non-positive dims " + std::to_string(rows) + "x" + std::to_string(cols));
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Plain (off-tape) matrix product, used by oracles and data-side code.
Tensor matmul_plain(const Tensor& a, const Tensor& b);

}  // namespace gip
