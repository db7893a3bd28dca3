#pragma once

#include <cstddef>
#include <vector>

#include "ssc/error.hpp"

namespace ssc {

// Dense row-major double tensor; most call sites use it as a 2D matrix.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> dims);
    static Tensor matrix(std::size_t rows, std::size_t cols) { return zeros({rows, cols}); }

    std::size_t numel() const { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }

    const double* row(std::size_t r) const { return values.data() + r * cols(); }
    double* row(std::size_t r) { return values.data() + r * cols(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    void check_finite(const char* what) const;
};

// out = x W^T + b, with x: n x in, w: out x in, b: out (or empty for none).
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);

// Reverse of linear_forward. grad_* accumulators must be pre-shaped.
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_x,
                     Tensor& grad_w, Tensor& grad_b);

// p -= lr * g, elementwise; shapes must match.
void sgd_step(Tensor& param, const Tensor& grad, double lr);

}  // namespace ssc
