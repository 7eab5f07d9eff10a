#include "gdla/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gdla {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) p *= d;
    return p;
}

[[noreturn]] void shape_error(const std::string& what) {
    throw std::invalid_argument(what);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : shape(std::move(dims)), data(product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != product(shape)) {
        shape_error("Tensor: value count " + std::to_string(data.size()) +
                    " does not match shape " + shape_str());
    }
}

std::size_t Tensor::numel() const { return product(shape); }

std::size_t Tensor::rows() const {
    if (rank() != 2) shape_error("rows(): tensor is not 2-D: " + shape_str());
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) shape_error("cols(): tensor is not 2-D: " + shape_str());
    return shape[1];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return data[i * cols() + j];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    return data[i * cols() + j];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }

Tensor ones(std::vector<std::size_t> dims) {
    Tensor t(std::move(dims));
    for (double& v : t.data) v = 1.0;
    return t;
}

Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

void ensure_finite(const Tensor& t, const char* context) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw std::domain_error(std::string(context) +
                                    ": non-finite value in result");
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        shape_error("matmul: operands must be 2-D, got " + a.shape_str() +
                    " and " + b.shape_str());
    }
    const std::size_t n = a.shape[0], k = a.shape[1];
    const std::size_t k2 = b.shape[0], m = b.shape[1];
    if (k != k2) {
        shape_error("matmul: inner dimensions disagree: " + a.shape_str() +
                    " vs " + b.shape_str());
    }
    Tensor c({n, m});
    // i-k-j loop order: per output element the adds still arrive in ascending
    // k order, so the accumulation sequence matches a plain dot product.
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.data.data() + i * k;
        double* crow = c.data.data() + i * m;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b.data.data() + kk * m;
            for (std::size_t j = 0; j < m; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    ensure_finite(c, "matmul");
    return c;
}

Tensor transpose(const Tensor& a) {
    const std::size_t n = a.rows(), m = a.cols();
    Tensor t({m, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) t.data[j * n + i] = a.data[i * m + j];
    return t;
}

namespace {

Tensor binary_op(const Tensor& a, const Tensor& b, double (*op)(double, double),
                 const char* name) {
    if (!a.same_shape(b)) {
        shape_error(std::string(name) + ": shape mismatch " + a.shape_str() +
                    " vs " + b.shape_str());
    }
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = op(a.data[i], b.data[i]);
    }
    ensure_finite(out, name);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, [](double x, double y) { return x + y; }, "add");
}

Tensor subtract(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, [](double x, double y) { return x - y; }, "subtract");
}

Tensor scale(const Tensor& a, double factor) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * factor;
    ensure_finite(out, "scale");
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, [](double x, double y) { return x * y; }, "hadamard");
}

Tensor elementwise_div(const Tensor& a, const Tensor& b, double eps) {
    if (!a.same_shape(b)) {
        shape_error("elementwise_div: shape mismatch " + a.shape_str() + " vs " +
                    b.shape_str());
    }
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = a.data[i] / (b.data[i] + eps);
    }
    ensure_finite(out, "elementwise_div");
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    const std::size_t n = a.rows(), m = a.cols();
    ensure_finite(a, "softmax_rows(input)");
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const double* in = a.data.data() + i * m;
        double* o = out.data.data() + i * m;
        double mx = in[0];
        for (std::size_t j = 1; j < m; ++j) mx = in[j] > mx ? in[j] : mx;
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < m; ++j) o[j] /= sum;
    }
    ensure_finite(out, "softmax_rows");
    return out;
}

Tensor rmsnorm_rows(const Tensor& a, double eps) {
    const std::size_t n = a.rows(), m = a.cols();
    if (m == 0) shape_error("rmsnorm_rows: empty rows");
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const double* in = a.data.data() + i * m;
        double* o = out.data.data() + i * m;
        double ss = 0.0;
        for (std::size_t j = 0; j < m; ++j) ss += in[j] * in[j];
        const double inv = 1.0 / std::sqrt(ss / static_cast<double>(m) + eps);
        for (std::size_t j = 0; j < m; ++j) o[j] = in[j] * inv;
    }
    ensure_finite(out, "rmsnorm_rows");
    return out;
}

double elu1(double x) { return x >= 0.0 ? x + 1.0 : std::exp(x); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double silu(double x) { return x * sigmoid(x); }

Tensor activation(const Tensor& a, Activation kind) {
    double (*fn)(double) = nullptr;
    switch (kind) {
        case Activation::Elu1: fn = elu1; break;
        case Activation::Silu: fn = silu; break;
        case Activation::Sigmoid: fn = sigmoid; break;
    }
    if (!fn) throw std::invalid_argument("activation: unknown kind");
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = fn(a.data[i]);
    ensure_finite(out, "activation");
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const std::size_t n = a.rows(), c1 = a.cols(), c2 = b.cols();
    if (b.rows() != n) {
        shape_error("concat_channels: token counts differ: " + a.shape_str() +
                    " vs " + b.shape_str());
    }
    Tensor out({n, c1 + c2});
    for (std::size_t i = 0; i < n; ++i) {
        double* o = out.data.data() + i * (c1 + c2);
        const double* pa = a.data.data() + i * c1;
        const double* pb = b.data.data() + i * c2;
        for (std::size_t j = 0; j < c1; ++j) o[j] = pa[j];
        for (std::size_t j = 0; j < c2; ++j) o[c1 + j] = pb[j];
    }
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
    const std::size_t n = a.rows(), m = a.cols();
    if (c0 > c1 || c1 > m) {
        shape_error("slice_cols: range [" + std::to_string(c0) + "," +
                    std::to_string(c1) + ") out of bounds for " + a.shape_str());
    }
    Tensor out({n, c1 - c0});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = c0; j < c1; ++j)
            out.data[i * (c1 - c0) + (j - c0)] = a.data[i * m + j];
    return out;
}

Tensor dwconv2d(const Tensor& x, GridShape grid, const Tensor& kernels) {
    const std::size_t n = x.rows(), c = x.cols();
    if (n != grid.tokens()) {
        shape_error("dwconv2d: token count " + std::to_string(n) +
                    " != grid " + std::to_string(grid.height) + "x" +
                    std::to_string(grid.width));
    }
    if (kernels.rank() != 3 || kernels.shape[0] != c ||
        kernels.shape[1] != kernels.shape[2]) {
        shape_error("dwconv2d: kernels must be C x k x k with C == channels, got " +
                    kernels.shape_str());
    }
    const std::size_t k = kernels.shape[1];
    if (k % 2 == 0) shape_error("dwconv2d: kernel size must be odd");
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(grid.height);
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(grid.width);

    Tensor out({n, c});
    for (std::ptrdiff_t r = 0; r < h; ++r) {
        for (std::ptrdiff_t col = 0; col < w; ++col) {
            double* orow = out.data.data() + (r * w + col) * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double* ker = kernels.data.data() + ch * k * k;
                double sum = 0.0;
                for (std::size_t dy = 0; dy < k; ++dy) {
                    const std::ptrdiff_t rr = r + static_cast<std::ptrdiff_t>(dy) - pad;
                    if (rr < 0 || rr >= h) continue;
                    for (std::size_t dx = 0; dx < k; ++dx) {
                        const std::ptrdiff_t cc = col + static_cast<std::ptrdiff_t>(dx) - pad;
                        if (cc < 0 || cc >= w) continue;
                        sum += x.data[(rr * w + cc) * c + ch] * ker[dy * k + dx];
                    }
                }
                orow[ch] = sum;
            }
        }
    }
    ensure_finite(out, "dwconv2d");
    return out;
}

Tensor pwconv(const Tensor& x, const Tensor& w) { return matmul(x, w); }

const char* activation_name(Activation kind) {
    switch (kind) {
        case Activation::Elu1: return "elu1";
        case Activation::Silu: return "silu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

Activation parse_activation(const std::string& name) {
    if (name == "elu1") return Activation::Elu1;
    if (name == "silu") return Activation::Silu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + name);
}

}  // namespace gdla
