#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gdla {

// Dense row-major tensor of doubles. Values are immutable by convention once
// an operation has produced them; every operation returns a fresh tensor and
// throws std::domain_error if it would produce a non-finite value.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);
    Tensor(std::vector<std::size_t> dims, std::vector<double> values);

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const;

    // 2-D accessors; throw if rank != 2.
    std::size_t rows() const;
    std::size_t cols() const;
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j);

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// H x W token grid; token t sits at (row = t / W, col = t % W).
struct GridShape {
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t tokens() const { return height * width; }
};

enum class Activation { Elu1, Silu, Sigmoid };

Tensor zeros(std::vector<std::size_t> dims);
Tensor ones(std::vector<std::size_t> dims);
Tensor identity(std::size_t n);

// Throws std::domain_error naming `context` if any value is NaN/Inf.
void ensure_finite(const Tensor& t, const char* context);

// C = A * B with deterministic accumulation: each output element is the sum
// of products in ascending inner-index order.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor hadamard(const Tensor& a, const Tensor& b);
// a_i / (b_i + eps)
Tensor elementwise_div(const Tensor& a, const Tensor& b, double eps);

// Rows are normalized with per-row max subtraction; each output row sums to 1.
Tensor softmax_rows(const Tensor& a);

// x / sqrt(mean(x^2) + eps), per row, no learnable gain.
Tensor rmsnorm_rows(const Tensor& a, double eps = 1e-6);

double elu1(double x);
double silu(double x);
double sigmoid(double x);
Tensor activation(const Tensor& a, Activation kind);

// Row i of the result is a's row i followed by b's row i.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Columns [c0, c1) of a 2-D tensor.
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);

// Per-channel 2-D cross-correlation on the token grid, zero same-padding,
// stride 1. x: N x C with N == H*W, kernels: C x k x k, k odd.
Tensor dwconv2d(const Tensor& x, GridShape grid, const Tensor& kernels);

// 1x1 convolution over channels == plain matmul, no bias.
Tensor pwconv(const Tensor& x, const Tensor& w);

const char* activation_name(Activation kind);
Activation parse_activation(const std::string& name);

}  // namespace gdla
