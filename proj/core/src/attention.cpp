#include "gdla/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gdla {

namespace {

constexpr double kNormalizerFloor = 1e-9;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

// phi(Q) [phi(K)^T V] / z without re-deriving phi; q and k arrive mapped.
Tensor linear_attention_mapped(const Tensor& phi_q, const Tensor& phi_k,
                               const Tensor& v, LinearMode mode) {
    const std::size_t n = phi_q.rows();
    const std::size_t d_v = v.cols();
    Tensor out({n, d_v});

    if (mode == LinearMode::Quadratic) {
        const Tensor sim = matmul(phi_q, transpose(phi_k));  // N x N
        const Tensor num = matmul(sim, v);
        for (std::size_t i = 0; i < n; ++i) {
            double z = 0.0;
            for (std::size_t t = 0; t < n; ++t) z += sim.at(i, t);
            z = z < kNormalizerFloor ? kNormalizerFloor : z;
            for (std::size_t j = 0; j < d_v; ++j) out.at(i, j) = num.at(i, j) / z;
        }
    } else {
        const Tensor kv = matmul(transpose(phi_k), v);  // d x d_v
        const std::size_t d = phi_k.cols();
        Tensor ksum({d, 1});
        for (std::size_t t = 0; t < phi_k.rows(); ++t)
            for (std::size_t j = 0; j < d; ++j) ksum.data[j] += phi_k.at(t, j);
        const Tensor num = matmul(phi_q, kv);   // N x d_v
        const Tensor zt = matmul(phi_q, ksum);  // N x 1
        for (std::size_t i = 0; i < n; ++i) {
            double z = zt.data[i];
            z = z < kNormalizerFloor ? kNormalizerFloor : z;
            for (std::size_t j = 0; j < d_v; ++j) out.at(i, j) = num.at(i, j) / z;
        }
    }
    ensure_finite(out, "linear_attention");
    return out;
}

}  // namespace

void HeadConfig::validate() const {
    require(d_model >= 1, "HeadConfig: d_model must be positive");
    require(heads >= 1, "HeadConfig: head count must be positive");
    require(d_h >= 2 && d_h % 2 == 0, "HeadConfig: d_h must be even and >= 2");
    require(layer_index >= 1, "HeadConfig: layer_index is 1-based");
    require(gate_kind == Activation::Silu || gate_kind == Activation::Sigmoid,
            "HeadConfig: gate must be silu or sigmoid");
    require(feature_map == Activation::Elu1, "HeadConfig: feature map must be elu1");
}

double lambda_init(std::size_t layer_index) {
    require(layer_index >= 1, "lambda_init: layer index is 1-based");
    return 0.8 - 0.6 * std::exp(-0.3 * static_cast<double>(layer_index - 1));
}

double DiffAttnParams::effective_lambda() const {
    return std::exp(dot(lambda_q1, lambda_k1)) - std::exp(dot(lambda_q2, lambda_k2)) +
           lambda_init_value;
}

DiffAttnParams DiffAttnParams::random(std::size_t d_h, std::size_t layer_index,
                                      Xoshiro256ss& rng) {
    require(d_h >= 2 && d_h % 2 == 0, "DiffAttnParams: d_h must be even");
    const std::size_t half = d_h / 2;
    DiffAttnParams p;
    p.lambda_q1 = random_fanin({half}, half, rng);
    p.lambda_k1 = random_fanin({half}, half, rng);
    p.lambda_q2 = random_fanin({half}, half, rng);
    p.lambda_k2 = random_fanin({half}, half, rng);
    p.lambda_init_value = lambda_init(layer_index);
    return p;
}

GdlaHeadParams GdlaHeadParams::random(const HeadConfig& cfg, Xoshiro256ss& rng) {
    cfg.validate();
    GdlaHeadParams p;
    p.w_q = random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng);
    p.w_k = random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng);
    p.w_v = random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng);
    p.w_g = random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng);
    p.lambda = Tensor({cfg.d_h});
    const double init = lambda_init(cfg.layer_index);
    for (double& v : p.lambda.data) v = init;
    return p;
}

GdlaHeadParams GdlaHeadParams::zero(const HeadConfig& cfg) {
    cfg.validate();
    GdlaHeadParams p;
    p.w_q = zeros({cfg.d_model, cfg.d_h});
    p.w_k = zeros({cfg.d_model, cfg.d_h});
    p.w_v = zeros({cfg.d_model, cfg.d_h});
    p.w_g = zeros({cfg.d_model, cfg.d_h});
    p.lambda = zeros({cfg.d_h});
    return p;
}

MultiHeadWeights MultiHeadWeights::random(const HeadConfig& cfg, Xoshiro256ss& rng) {
    cfg.validate();
    MultiHeadWeights w;
    for (std::size_t i = 0; i < cfg.heads; ++i) {
        w.heads.push_back({random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng),
                           random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng),
                           random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng)});
    }
    w.w_out = random_fanin({cfg.d_k(), cfg.d_model}, cfg.d_k(), rng);
    return w;
}

DiffAttnWeights DiffAttnWeights::random(const HeadConfig& cfg, Xoshiro256ss& rng) {
    cfg.validate();
    DiffAttnWeights w;
    for (std::size_t i = 0; i < cfg.heads; ++i) {
        w.heads.push_back({random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng),
                           random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng),
                           random_fanin({cfg.d_model, cfg.d_h}, cfg.d_model, rng)});
    }
    w.w_out = random_fanin({cfg.d_k(), cfg.d_model}, cfg.d_k(), rng);
    w.params = DiffAttnParams::random(cfg.d_h, cfg.layer_index, rng);
    return w;
}

std::pair<Tensor, Tensor> split_halves(const Tensor& t) {
    const std::size_t d = t.cols();
    require(d % 2 == 0, "split_halves: channel width must be even, got " +
                            std::to_string(d));
    return {slice_cols(t, 0, d / 2), slice_cols(t, d / 2, d)};
}

Tensor softmax_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
    require(q.cols() == k.cols(), "softmax_attention: Q/K widths differ");
    require(k.rows() == v.rows(), "softmax_attention: K/V token counts differ");
    require(q.rows() == k.rows(), "softmax_attention: Q/K token counts differ");
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    const Tensor scores = scale(matmul(q, transpose(k)), inv_scale);
    return matmul(softmax_rows(scores), v);
}

Tensor diff_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                      const DiffAttnParams& params) {
    auto [q1, q2] = split_halves(q);
    auto [k1, k2] = split_halves(k);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(q1.cols()));
    const Tensor a1 = softmax_rows(scale(matmul(q1, transpose(k1)), inv_scale));
    const Tensor a2 = softmax_rows(scale(matmul(q2, transpose(k2)), inv_scale));
    const double lambda = params.effective_lambda();
    return matmul(subtract(a1, scale(a2, lambda)), v);
}

Tensor linear_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        LinearMode mode) {
    require(q.cols() == k.cols(), "linear_attention: Q/K widths differ");
    require(k.rows() == v.rows(), "linear_attention: K/V token counts differ");
    const Tensor phi_q = activation(q, Activation::Elu1);
    const Tensor phi_k = activation(k, Activation::Elu1);
    return linear_attention_mapped(phi_q, phi_k, v, mode);
}

Tensor diff_linear_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             const Tensor& lambda) {
    require(lambda.rank() == 1 && lambda.shape[0] == v.cols(),
            "diff_linear_attention: lambda length must equal value width");
    auto [q1, q2] = split_halves(q);
    auto [k1, k2] = split_halves(k);
    const Tensor a1 = linear_attention(q1, k1, v, LinearMode::Associative);
    const Tensor a2 = linear_attention(q2, k2, v, LinearMode::Associative);
    Tensor out({a1.rows(), a1.cols()});
    const std::size_t d_v = a1.cols();
    for (std::size_t i = 0; i < a1.rows(); ++i)
        for (std::size_t j = 0; j < d_v; ++j)
            out.at(i, j) = a1.at(i, j) - lambda.data[j] * a2.at(i, j);
    ensure_finite(out, "diff_linear_attention");
    return out;
}

namespace detail {

Tensor gated_head_projected(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& g_raw, const Tensor& lambda,
                            Activation gate_kind) {
    const Tensor dla = diff_linear_attention(q, k, v, lambda);
    const Tensor normed = rmsnorm_rows(dla);
    return hadamard(normed, activation(g_raw, gate_kind));
}

}  // namespace detail

Tensor gated_head(const Tensor& x, const GdlaHeadParams& params,
                  const HeadConfig& cfg) {
    cfg.validate();
    require(x.cols() == cfg.d_model, "gated_head: input width != d_model");
    const Tensor q = matmul(x, params.w_q);
    const Tensor k = matmul(x, params.w_k);
    const Tensor v = matmul(x, params.w_v);
    const Tensor g = matmul(x, params.w_g);
    return detail::gated_head_projected(q, k, v, g, params.lambda, cfg.gate_kind);
}

Tensor gdla_multihead(const Tensor& x, const std::vector<GdlaHeadParams>& heads,
                      const HeadConfig& cfg) {
    cfg.validate();
    require(heads.size() == cfg.heads,
            "gdla_multihead: head parameter count != configured head count");
    Tensor out = gated_head(x, heads[0], cfg);
    for (std::size_t i = 1; i < heads.size(); ++i) {
        out = concat_channels(out, gated_head(x, heads[i], cfg));
    }
    return out;
}

Tensor diff_attention_multihead(const Tensor& x, const DiffAttnWeights& weights,
                                const HeadConfig& cfg) {
    cfg.validate();
    require(weights.heads.size() == cfg.heads,
            "diff_attention_multihead: head count mismatch");
    require(weights.w_out.rows() == cfg.d_k() && weights.w_out.cols() == cfg.d_model,
            "diff_attention_multihead: W^O must be (h*d_h) x d_model");
    const double rescale = 1.0 - lambda_init(cfg.layer_index);
    Tensor cat;
    for (std::size_t i = 0; i < cfg.heads; ++i) {
        const auto& hp = weights.heads[i];
        const Tensor head = diff_attention(matmul(x, hp.w_q), matmul(x, hp.w_k),
                                           matmul(x, hp.w_v), weights.params);
        const Tensor rescaled = scale(rmsnorm_rows(head), rescale);
        cat = i == 0 ? rescaled : concat_channels(cat, rescaled);
    }
    return matmul(cat, weights.w_out);
}

namespace {

template <typename HeadFn>
Tensor multihead_assembly(const Tensor& x, const MultiHeadWeights& weights,
                          const HeadConfig& cfg, HeadFn head_fn) {
    cfg.validate();
    require(weights.heads.size() == cfg.heads, "multihead: head count mismatch");
    require(weights.w_out.rows() == cfg.d_k() && weights.w_out.cols() == cfg.d_model,
            "multihead: W^O must be (h*d_h) x d_model");
    Tensor cat;
    for (std::size_t i = 0; i < cfg.heads; ++i) {
        const auto& hp = weights.heads[i];
        const Tensor head =
            head_fn(matmul(x, hp.w_q), matmul(x, hp.w_k), matmul(x, hp.w_v));
        cat = i == 0 ? head : concat_channels(cat, head);
    }
    return matmul(cat, weights.w_out);
}

}  // namespace

Tensor softmax_attention_multihead(const Tensor& x, const MultiHeadWeights& weights,
                                   const HeadConfig& cfg) {
    return multihead_assembly(x, weights, cfg,
                              [](const Tensor& q, const Tensor& k, const Tensor& v) {
                                  return softmax_attention(q, k, v);
                              });
}

Tensor linear_attention_multihead(const Tensor& x, const MultiHeadWeights& weights,
                                  const HeadConfig& cfg, LinearMode mode) {
    return multihead_assembly(x, weights, cfg,
                              [mode](const Tensor& q, const Tensor& k, const Tensor& v) {
                                  return linear_attention(q, k, v, mode);
                              });
}

}  // namespace gdla
