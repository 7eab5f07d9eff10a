#include "gdla/mixer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gdla {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// Horizontal stack of the per-head projection matrices, so X * stacked equals
// the per-head products laid side by side.
Tensor hstack_heads(const std::vector<GdlaHeadParams>& heads,
                    Tensor GdlaHeadParams::*member) {
    Tensor out = heads[0].*member;
    for (std::size_t i = 1; i < heads.size(); ++i)
        out = concat_channels(out, heads[i].*member);
    return out;
}

}  // namespace

std::size_t FfnConfig::hidden_width(std::size_t d_model) const {
    const double w = alpha * static_cast<double>(d_model);
    const auto rounded = static_cast<long long>(std::llround(w));
    return rounded < 1 ? 1 : static_cast<std::size_t>(rounded);
}

void FfnConfig::validate() const {
    require(alpha > 0.0, "FfnConfig: alpha must be positive");
    require(dw_kernel % 2 == 1, "FfnConfig: depthwise kernel must be odd");
}

FfnWeights FfnWeights::random(std::size_t d_model, const FfnConfig& cfg,
                              Xoshiro256ss& rng) {
    cfg.validate();
    const std::size_t dh = cfg.hidden_width(d_model);
    FfnWeights w;
    switch (cfg.kind) {
        case FfnKind::Mlp:
            w.in_proj = random_fanin({d_model, dh}, d_model, rng);
            w.out_proj = random_fanin({dh, d_model}, dh, rng);
            break;
        case FfnKind::Swiglu:
            w.in_proj = random_fanin({d_model, dh}, d_model, rng);
            w.gate_proj = random_fanin({d_model, dh}, d_model, rng);
            w.out_proj = random_fanin({dh, d_model}, dh, rng);
            break;
        case FfnKind::Mixffn:
            w.in_proj = random_fanin({d_model, 2 * dh}, d_model, rng);
            w.dw_kernels = random_fanin({2 * dh, cfg.dw_kernel, cfg.dw_kernel},
                                        cfg.dw_kernel * cfg.dw_kernel, rng);
            w.out_proj = random_fanin({dh, d_model}, dh, rng);
            break;
    }
    return w;
}

FfnWeights FfnWeights::zero(std::size_t d_model, const FfnConfig& cfg) {
    cfg.validate();
    const std::size_t dh = cfg.hidden_width(d_model);
    FfnWeights w;
    switch (cfg.kind) {
        case FfnKind::Mlp:
            w.in_proj = zeros({d_model, dh});
            w.out_proj = zeros({dh, d_model});
            break;
        case FfnKind::Swiglu:
            w.in_proj = zeros({d_model, dh});
            w.gate_proj = zeros({d_model, dh});
            w.out_proj = zeros({dh, d_model});
            break;
        case FfnKind::Mixffn:
            w.in_proj = zeros({d_model, 2 * dh});
            w.dw_kernels = zeros({2 * dh, cfg.dw_kernel, cfg.dw_kernel});
            w.out_proj = zeros({dh, d_model});
            break;
    }
    return w;
}

LocalMixer LocalMixer::random(std::size_t channels, std::size_t k,
                              Xoshiro256ss& rng) {
    require(k % 2 == 1, "LocalMixer: kernel size must be odd");
    return {random_fanin({channels, k, k}, k * k, rng),
            random_fanin({channels, channels}, channels, rng)};
}

LocalMixer LocalMixer::identity_mixer(std::size_t channels, std::size_t k) {
    require(k % 2 == 1, "LocalMixer: kernel size must be odd");
    Tensor dw({channels, k, k});
    const std::size_t center = (k / 2) * k + (k / 2);
    for (std::size_t c = 0; c < channels; ++c) dw.data[c * k * k + center] = 1.0;
    return {std::move(dw), identity(channels)};
}

LocalMixer LocalMixer::zero(std::size_t channels, std::size_t k) {
    require(k % 2 == 1, "LocalMixer: kernel size must be odd");
    return {zeros({channels, k, k}), zeros({channels, channels})};
}

MixerWeights MixerWeights::random(const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                                  std::size_t dwc_kernel, Xoshiro256ss& rng) {
    cfg.validate();
    require(dwc_kernel == 3 || dwc_kernel == 5,
            "MixerWeights: local-mixer DWC kernel must be 3 or 5");
    MixerWeights w;
    for (std::size_t i = 0; i < cfg.heads; ++i)
        w.global_heads.push_back(GdlaHeadParams::random(cfg, rng));
    for (std::size_t i = 0; i < cfg.heads; ++i)
        w.local.heads.push_back(GdlaHeadParams::random(cfg, rng));
    const std::size_t d_k = cfg.d_k();
    w.local.mix_q = LocalMixer::random(d_k, dwc_kernel, rng);
    w.local.mix_k = LocalMixer::random(d_k, dwc_kernel, rng);
    w.local.mix_v = LocalMixer::random(d_k, dwc_kernel, rng);
    w.local.mix_g = LocalMixer::random(d_k, dwc_kernel, rng);
    w.w_fuse = random_fanin({2 * cfg.d_model, cfg.d_model}, 2 * cfg.d_model, rng);
    w.ffn = FfnWeights::random(cfg.d_model, ffn_cfg, rng);
    return w;
}

MixerWeights MixerWeights::zero(const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                                std::size_t dwc_kernel) {
    cfg.validate();
    require(dwc_kernel == 3 || dwc_kernel == 5,
            "MixerWeights: local-mixer DWC kernel must be 3 or 5");
    MixerWeights w;
    for (std::size_t i = 0; i < cfg.heads; ++i)
        w.global_heads.push_back(GdlaHeadParams::zero(cfg));
    for (std::size_t i = 0; i < cfg.heads; ++i)
        w.local.heads.push_back(GdlaHeadParams::zero(cfg));
    const std::size_t d_k = cfg.d_k();
    w.local.mix_q = LocalMixer::zero(d_k, dwc_kernel);
    w.local.mix_k = LocalMixer::zero(d_k, dwc_kernel);
    w.local.mix_v = LocalMixer::zero(d_k, dwc_kernel);
    w.local.mix_g = LocalMixer::zero(d_k, dwc_kernel);
    w.w_fuse = zeros({2 * cfg.d_model, cfg.d_model});
    w.ffn = FfnWeights::zero(cfg.d_model, ffn_cfg);
    return w;
}

Tensor local_mix(const Tensor& x, GridShape grid, const Tensor& dw_kernels,
                 const Tensor& pw) {
    return pwconv(dwconv2d(x, grid, dw_kernels), pw);
}

Tensor local_branch(const Tensor& x, GridShape grid,
                    const LocalBranchWeights& weights, const HeadConfig& cfg) {
    cfg.validate();
    require(!weights.heads.empty() && weights.heads.size() == cfg.heads,
            "local_branch: head count mismatch");
    require(x.rows() == grid.tokens(), "local_branch: token count != grid");

    const Tensor q_full = matmul(x, hstack_heads(weights.heads, &GdlaHeadParams::w_q));
    const Tensor k_full = matmul(x, hstack_heads(weights.heads, &GdlaHeadParams::w_k));
    const Tensor v_full = matmul(x, hstack_heads(weights.heads, &GdlaHeadParams::w_v));
    const Tensor g_full = matmul(x, hstack_heads(weights.heads, &GdlaHeadParams::w_g));

    const Tensor q_p = local_mix(q_full, grid, weights.mix_q.dw_kernels, weights.mix_q.pw);
    const Tensor k_p = local_mix(k_full, grid, weights.mix_k.dw_kernels, weights.mix_k.pw);
    const Tensor v_p = local_mix(v_full, grid, weights.mix_v.dw_kernels, weights.mix_v.pw);
    const Tensor g_p = local_mix(g_full, grid, weights.mix_g.dw_kernels, weights.mix_g.pw);

    Tensor out;
    for (std::size_t i = 0; i < cfg.heads; ++i) {
        const std::size_t c0 = i * cfg.d_h, c1 = (i + 1) * cfg.d_h;
        const Tensor head = detail::gated_head_projected(
            slice_cols(q_p, c0, c1), slice_cols(k_p, c0, c1),
            slice_cols(v_p, c0, c1), slice_cols(g_p, c0, c1),
            weights.heads[i].lambda, cfg.gate_kind);
        out = i == 0 ? head : concat_channels(out, head);
    }
    return out;
}

Tensor fuse(const Tensor& global_out, const Tensor& local_out, const Tensor& w_o) {
    require(global_out.cols() == local_out.cols(),
            "fuse: branch widths differ: " + global_out.shape_str() + " vs " +
                local_out.shape_str());
    require(w_o.rows() == global_out.cols() + local_out.cols(),
            "fuse: W_O rows must equal concatenated width");
    return matmul(concat_channels(global_out, local_out), w_o);
}

Tensor ffn_forward(const Tensor& x, GridShape grid, const FfnConfig& cfg,
                   const FfnWeights& weights) {
    cfg.validate();
    switch (cfg.kind) {
        case FfnKind::Mlp:
            return matmul(activation(matmul(x, weights.in_proj), Activation::Silu),
                          weights.out_proj);
        case FfnKind::Swiglu: {
            const Tensor gate = activation(matmul(x, weights.in_proj), Activation::Silu);
            return matmul(hadamard(gate, matmul(x, weights.gate_proj)),
                          weights.out_proj);
        }
        case FfnKind::Mixffn: {
            require(x.rows() == grid.tokens(), "ffn_forward: mixffn needs the token grid");
            const Tensor expanded =
                activation(matmul(x, weights.in_proj), Activation::Silu);
            const Tensor mixed = dwconv2d(expanded, grid, weights.dw_kernels);
            auto [x_hat, gate] = split_halves(mixed);
            return matmul(hadamard(x_hat, activation(gate, Activation::Silu)),
                          weights.out_proj);
        }
    }
    throw std::invalid_argument("ffn_forward: unknown kind");
}

Tensor gdla_mixer_update(const Tensor& x, GridShape grid,
                         const MixerWeights& weights, const HeadConfig& cfg) {
    cfg.validate();
    require(cfg.d_k() == cfg.d_model,
            "gdla mixer: h*d_h must equal d_model so both branches are d_model wide");
    require(x.rows() == grid.tokens(), "gdla mixer: token count != grid");
    const Tensor normed = rmsnorm_rows(x);
    const Tensor global_out = gdla_multihead(normed, weights.global_heads, cfg);
    const Tensor local_out = local_branch(normed, grid, weights.local, cfg);
    return fuse(global_out, local_out, weights.w_fuse);
}

Tensor gdla_block_forward(const Tensor& x, GridShape grid,
                          const MixerWeights& weights, const HeadConfig& cfg,
                          const FfnConfig& ffn_cfg) {
    const Tensor y1 = add(x, gdla_mixer_update(x, grid, weights, cfg));
    const Tensor y2 = add(y1, ffn_forward(rmsnorm_rows(y1), grid, ffn_cfg, weights.ffn));
    return y2;
}

const char* ffn_kind_name(FfnKind kind) {
    switch (kind) {
        case FfnKind::Mlp: return "mlp";
        case FfnKind::Swiglu: return "swiglu";
        case FfnKind::Mixffn: return "mixffn";
    }
    return "?";
}

FfnKind parse_ffn_kind(const std::string& name) {
    if (name == "mlp") return FfnKind::Mlp;
    if (name == "swiglu") return FfnKind::Swiglu;
    if (name == "mixffn") return FfnKind::Mixffn;
    throw std::invalid_argument("unknown ffn kind: " + name);
}

}  // namespace gdla
