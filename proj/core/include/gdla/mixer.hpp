#pragma once

#include <string>
#include <vector>

#include "gdla/attention.hpp"
#include "gdla/tensor.hpp"

namespace gdla {

enum class FfnKind { Mlp, Swiglu, Mixffn };

struct FfnConfig {
    FfnKind kind = FfnKind::Mixffn;
    double alpha = 4.0;        // d_hidden = round(alpha * d_model), >= 1
    std::size_t dw_kernel = 3; // mixffn depthwise kernel, odd

    std::size_t hidden_width(std::size_t d_model) const;
    void validate() const;
};

// Weights for one FFN. Used members depend on the kind:
//   mlp:    in_proj d x dh,      out_proj dh x d
//   swiglu: in_proj d x dh (W1), gate_proj d x dh (W2), out_proj dh x d (W3)
//   mixffn: in_proj d x 2dh,     dw_kernels 2dh x k x k, out_proj dh x d
struct FfnWeights {
    Tensor in_proj;
    Tensor gate_proj;
    Tensor dw_kernels;
    Tensor out_proj;

    static FfnWeights random(std::size_t d_model, const FfnConfig& cfg,
                             Xoshiro256ss& rng);
    static FfnWeights zero(std::size_t d_model, const FfnConfig& cfg);
};

// Depthwise-then-pointwise local token mixer f = PWC(DWC(.)).
struct LocalMixer {
    Tensor dw_kernels;  // C x k x k
    Tensor pw;          // C x C

    static LocalMixer random(std::size_t channels, std::size_t k, Xoshiro256ss& rng);
    // Delta DWC kernels + identity PWC: f == identity.
    static LocalMixer identity_mixer(std::size_t channels, std::size_t k);
    static LocalMixer zero(std::size_t channels, std::size_t k);
};

// Local branch parameters: per-head projections/lambda' plus one local mixer
// per projection path. The mixers act on the full h*d_h width, so channel
// mixing in the PWC crosses head boundaries before the per-head split.
struct LocalBranchWeights {
    std::vector<GdlaHeadParams> heads;  // carries the lambda' vectors
    LocalMixer mix_q, mix_k, mix_v, mix_g;
};

struct MixerWeights {
    std::vector<GdlaHeadParams> global_heads;
    LocalBranchWeights local;
    Tensor w_fuse;  // 2*d_model x d_model
    FfnWeights ffn;

    static MixerWeights random(const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                               std::size_t dwc_kernel, Xoshiro256ss& rng);
    static MixerWeights zero(const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                             std::size_t dwc_kernel);
};

// f(x) = pwconv(dwconv2d(x)); shapes preserved.
Tensor local_mix(const Tensor& x, GridShape grid, const Tensor& dw_kernels,
                 const Tensor& pw);

// Full-width projections passed through local_mix, then the GDLA multi-head
// computation on the primed tensors with lambda'.
Tensor local_branch(const Tensor& x, GridShape grid,
                    const LocalBranchWeights& weights, const HeadConfig& cfg);

// concat_channels(global_out, local_out) * W_O.
Tensor fuse(const Tensor& global_out, const Tensor& local_out, const Tensor& w_o);

Tensor ffn_forward(const Tensor& x, GridShape grid, const FfnConfig& cfg,
                   const FfnWeights& weights);

// Pre-norm residual block: Y1 = X + mixer(rmsnorm(X)); Y2 = Y1 + ffn(rmsnorm(Y1)).
Tensor gdla_block_forward(const Tensor& x, GridShape grid,
                          const MixerWeights& weights, const HeadConfig& cfg,
                          const FfnConfig& ffn_cfg);

// The fused pre-residual mixer update on normalized input; what the block adds
// to X before the FFN. Exposed for the delta-attn diagnostics.
Tensor gdla_mixer_update(const Tensor& x, GridShape grid,
                         const MixerWeights& weights, const HeadConfig& cfg);

const char* ffn_kind_name(FfnKind kind);
FfnKind parse_ffn_kind(const std::string& name);

}  // namespace gdla
