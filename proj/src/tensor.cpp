#include "ssc/tensor.hpp"

#include <cmath>
#include <string>

namespace ssc {

Tensor Tensor::zeros(std::vector<std::size_t> dims) {
    Tensor t;
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    t.shape = std::move(dims);
    t.values.assign(n, 0.0);
    return t;
}

void Tensor::check_finite(const char* what) const {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw invalid_input(std::string(what) + " contains a non-finite value");
        }
    }
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t n = x.rows(), in = x.cols(), out = w.rows();
    if (w.cols() != in) {
        throw invalid_input("linear_forward: weight expects " + std::to_string(w.cols()) +
                            " inputs, got " + std::to_string(in));
    }
    if (!b.values.empty() && b.numel() != out) {
        throw invalid_input("linear_forward: bias size mismatch");
    }
    Tensor y = Tensor::matrix(n, out);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        double* yi = y.row(i);
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = w.row(o);
            double s = b.values.empty() ? 0.0 : b.values[o];
            for (std::size_t j = 0; j < in; ++j) s += wo[j] * xi[j];
            yi[o] = s;
        }
    }
    return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_x,
                     Tensor& grad_w, Tensor& grad_b) {
    const std::size_t n = x.rows(), in = x.cols(), out = w.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        const double* gi = grad_out.row(i);
        double* gxi = grad_x.row(i);
        for (std::size_t o = 0; o < out; ++o) {
            const double g = gi[o];
            if (!grad_b.values.empty()) grad_b.values[o] += g;
            const double* wo = w.row(o);
            double* gwo = grad_w.row(o);
            for (std::size_t j = 0; j < in; ++j) {
                gxi[j] += g * wo[j];
                gwo[j] += g * xi[j];
            }
        }
    }
}

void sgd_step(Tensor& param, const Tensor& grad, double lr) {
    if (!param.same_shape(grad)) throw invalid_input("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < param.values.size(); ++i) {
        param.values[i] -= lr * grad.values[i];
    }
}

}  // namespace ssc
