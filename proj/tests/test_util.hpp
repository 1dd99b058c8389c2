#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "gip/rng.hpp"
#include "gip/tape.hpp"

namespace gip::test {

inline Tensor random_tensor(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

inline Tensor random_symmetric(int n, Rng& rng, double lo = 0.0, double hi = 1.0,
                               bool zero_diag = true) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (i == j && zero_diag) continue;
            const double v = rng.uniform(lo, hi);
            t.at(i, j) = v;
            t.at(j, i) = v;
        }
    return t;
}

/// Builds a scalar from bound parameter values.
using ScalarBuilder = std::function<Value(Tape&, const std::vector<Value>&)>;

/// Central finite-difference check of every coordinate of every parameter.
/// Combined tolerance: |a - n| <= max(abs_tol, rel_tol * max(|a|, |n|)).
inline void check_gradients(const ScalarBuilder& f, std::vector<Tensor> params,
                            double step = 1e-5, double rel_tol = 1e-4, double abs_tol = 1e-7) {
    Tape tape;
    std::vector<Value> bound;
    for (const auto& p : params) bound.push_back(tape.param(p));
    Value out = f(tape, bound);
    tape.backward(out);
    std::vector<Tensor> analytic;
    for (const Value& v : bound) analytic.push_back(tape.grad(v));

    auto eval = [&](const std::vector<Tensor>& ps) {
        Tape t2;
        std::vector<Value> b2;
        for (const auto& p : ps) b2.push_back(t2.param(p));
        return f(t2, b2).item();
    };

    for (size_t p = 0; p < params.size(); ++p) {
        for (int i = 0; i < params[p].size(); ++i) {
            auto plus = params;
            auto minus = params;
            plus[p][i] += step;
            minus[p][i] -= step;
            const double numeric = (eval(plus) - eval(minus)) / (2.0 * step);
            const double a = analytic[p][i];
            const double err = std::fabs(a - numeric);
            const double tol = std::max(abs_tol, rel_tol * std::max(std::fabs(a), std::fabs(numeric)));
            INFO("param ", p, " coord ", i, ": analytic ", a, " numeric ", numeric);
            CHECK(err <= tol);
        }
    }
}

/// Spot-check a random subset of coordinates per parameter (for large nets).
inline void check_gradients_sampled(const ScalarBuilder& f, std::vector<Tensor> params,
                                    int coords_per_param, Rng& rng, double step = 1e-5,
                                    double rel_tol = 1e-4, double abs_tol = 1e-7) {
    Tape tape;
    std::vector<Value> bound;
    for (const auto& p : params) bound.push_back(tape.param(p));
    Value out = f(tape, bound);
    tape.backward(out);
    std::vector<Tensor> analytic;
    for (const Value& v : bound) analytic.push_back(tape.grad(v));

    auto eval = [&](const std::vector<Tensor>& ps) {
        Tape t2;
        std::vector<Value> b2;
        for (const auto& p : ps) b2.push_back(t2.param(p));
        return f(t2, b2).item();
    };

    for (size_t p = 0; p < params.size(); ++p) {
        for (int s = 0; s < coords_per_param; ++s) {
            const int i = static_cast<int>(rng.uniform_int(0, params[p].size() - 1));
            auto plus = params;
            auto minus = params;
            plus[p][i] += step;
            minus[p][i] -= step;
            const double numeric = (eval(plus) - eval(minus)) / (2.0 * step);
            const double a = analytic[p][i];
            const double err = std::fabs(a - numeric);
            const double tol = std::max(abs_tol, rel_tol * std::max(std::fabs(a), std::fabs(numeric)));
            INFO("param ", p, " coord ", i, ": analytic ", a, " numeric ", numeric);
            CHECK(err <= tol);
        }
    }
}

}  // namespace gip::test
