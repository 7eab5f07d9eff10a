#pragma once

#include <cstdint>
#include <vector>

#include "gdla/prng.hpp"
#include "gdla/tensor.hpp"

namespace gdla {

// Attention hyperparameters. Queries/keys of each head split into two halves
// of d_h/2 channels, so d_h must be even.
struct HeadConfig {
    std::size_t d_model = 0;
    std::size_t heads = 0;
    std::size_t d_h = 0;
    std::size_t layer_index = 1;  // 1-based
    Activation gate_kind = Activation::Silu;
    Activation feature_map = Activation::Elu1;

    std::size_t d_k() const { return heads * d_h; }
    void validate() const;
};

// 0.8 - 0.6 * exp(-0.3 * (l - 1)); l >= 1.
double lambda_init(std::size_t layer_index);

// Subtraction coefficient reparameterization for differential attention:
// lambda = exp(lq1 . lk1) - exp(lq2 . lk2) + lambda_init_value.
struct DiffAttnParams {
    Tensor lambda_q1, lambda_k1, lambda_q2, lambda_k2;  // length d_h/2 each
    double lambda_init_value = 0.0;

    double effective_lambda() const;

    static DiffAttnParams random(std::size_t d_h, std::size_t layer_index,
                                 Xoshiro256ss& rng);
};

// One GDLA head: projections to the head subspace plus the channel-wise
// subtraction vector lambda (length d_h, unconstrained).
struct GdlaHeadParams {
    Tensor w_q, w_k, w_v, w_g;  // d_model x d_h
    Tensor lambda;              // d_h

    static GdlaHeadParams random(const HeadConfig& cfg, Xoshiro256ss& rng);
    static GdlaHeadParams zero(const HeadConfig& cfg);
};

// Per-head projections for the softmax / linear baselines.
struct AttnHeadProj {
    Tensor w_q, w_k, w_v;  // d_model x d_h
};

struct MultiHeadWeights {
    std::vector<AttnHeadProj> heads;
    Tensor w_out;  // h*d_h x d_model

    static MultiHeadWeights random(const HeadConfig& cfg, Xoshiro256ss& rng);
};

struct DiffAttnWeights {
    std::vector<AttnHeadProj> heads;
    Tensor w_out;  // h*d_h x d_model
    DiffAttnParams params;  // layer-shared

    static DiffAttnWeights random(const HeadConfig& cfg, Xoshiro256ss& rng);
};

// softmax(Q K^T / sqrt(d)) V
Tensor softmax_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Two-branch softmax attention over complementary query/key halves:
// (A1 - lambda * A2) V with branch scaling sqrt(width/2).
Tensor diff_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                      const DiffAttnParams& params);

enum class LinearMode {
    Associative,  // phi(Q) [phi(K)^T V] / z   -- O(N)
    Quadratic,    // [phi(Q) phi(K)^T] V / z   -- O(N^2) oracle form
};

// Kernelized attention with phi = ELU(.)+1 applied to Q and K; the per-row
// normalizer z = phi(Q) [phi(K)^T 1] is clamped below at 1e-9.
Tensor linear_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        LinearMode mode);

// A1 - lambda (.) A2 with per-branch kernelized attention (associative) over
// the query/key halves; lambda has length v.cols() and broadcasts over rows.
Tensor diff_linear_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             const Tensor& lambda);

// One GDLA head on raw tokens X: project, run diff-linear attention,
// RMS-normalize, then apply the activation(X W_g) gate.
Tensor gated_head(const Tensor& x, const GdlaHeadParams& params,
                  const HeadConfig& cfg);

// Head outputs concatenated along channels, head order preserved. No output
// projection and no (1 - lambda_init) rescale here; fusion happens upstream.
Tensor gdla_multihead(const Tensor& x, const std::vector<GdlaHeadParams>& heads,
                      const HeadConfig& cfg);

// Multi-head differential attention with per-head RMSNorm, the
// (1 - lambda_init) rescale, concatenation, and the W^O projection.
Tensor diff_attention_multihead(const Tensor& x, const DiffAttnWeights& weights,
                                const HeadConfig& cfg);

// Standard multi-head assemblies for the baselines (concat + W^O).
Tensor softmax_attention_multihead(const Tensor& x, const MultiHeadWeights& weights,
                                   const HeadConfig& cfg);
Tensor linear_attention_multihead(const Tensor& x, const MultiHeadWeights& weights,
                                  const HeadConfig& cfg,
                                  LinearMode mode = LinearMode::Associative);

// Split a width-d tensor into its first and second halves of d/2 columns.
std::pair<Tensor, Tensor> split_halves(const Tensor& t);

namespace detail {
// GDLA head body on already-projected tensors; shared with the local branch.
Tensor gated_head_projected(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& g_raw, const Tensor& lambda,
                            Activation gate_kind);
}  // namespace detail

}  // namespace gdla
