#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gdla/mixer.hpp"
#include "gdla/prng.hpp"

using namespace gdla;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

HeadConfig mixer_cfg(std::size_t d_model, std::size_t h) {
    HeadConfig cfg;
    cfg.d_model = d_model;
    cfg.heads = h;
    cfg.d_h = d_model / h;
    cfg.layer_index = 1;
    cfg.gate_kind = Activation::Silu;
    return cfg;
}

}  // namespace

TEST_CASE("local_mix: delta kernels + identity PWC is the identity map") {
    const GridShape grid{4, 5};
    Xoshiro256ss rng(40);
    const Tensor x = random_gaussian({grid.tokens(), 6}, rng);
    const LocalMixer f = LocalMixer::identity_mixer(6, 3);
    CHECK(max_abs_diff(local_mix(x, grid, f.dw_kernels, f.pw), x) == 0.0);
}

TEST_CASE("local_mix: linearity and scripted chain") {
    const GridShape grid{3, 4};
    Xoshiro256ss rng(42);
    const LocalMixer f = LocalMixer::random(4, 3, rng);
    const Tensor a = random_gaussian({grid.tokens(), 4}, rng);
    const Tensor b = random_gaussian({grid.tokens(), 4}, rng);

    const Tensor lhs = local_mix(add(a, b), grid, f.dw_kernels, f.pw);
    const Tensor rhs = add(local_mix(a, grid, f.dw_kernels, f.pw),
                           local_mix(b, grid, f.dw_kernels, f.pw));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);

    const Tensor chained = pwconv(dwconv2d(a, grid, f.dw_kernels), f.pw);
    CHECK(max_abs_diff(local_mix(a, grid, f.dw_kernels, f.pw), chained) <= 1e-14);
}

TEST_CASE("local_branch: identity mixers reduce to the global branch") {
    const GridShape grid{4, 4};
    const HeadConfig cfg = mixer_cfg(8, 2);
    Xoshiro256ss rng(44);
    std::vector<GdlaHeadParams> heads = {GdlaHeadParams::random(cfg, rng),
                                         GdlaHeadParams::random(cfg, rng)};
    LocalBranchWeights local;
    local.heads = heads;
    local.mix_q = LocalMixer::identity_mixer(8, 3);
    local.mix_k = LocalMixer::identity_mixer(8, 3);
    local.mix_v = LocalMixer::identity_mixer(8, 3);
    local.mix_g = LocalMixer::identity_mixer(8, 3);

    const Tensor x = random_gaussian({grid.tokens(), 8}, rng);
    CHECK(max_abs_diff(local_branch(x, grid, local, cfg),
                       gdla_multihead(x, heads, cfg)) <= 1e-12);
}

TEST_CASE("local_branch: shape law, scripted composition, grid mismatch") {
    const GridShape grid{3, 4};
    const HeadConfig cfg = mixer_cfg(8, 2);
    Xoshiro256ss rng(46);
    LocalBranchWeights local;
    local.heads = {GdlaHeadParams::random(cfg, rng), GdlaHeadParams::random(cfg, rng)};
    local.mix_q = LocalMixer::random(8, 3, rng);
    local.mix_k = LocalMixer::random(8, 3, rng);
    local.mix_v = LocalMixer::random(8, 3, rng);
    local.mix_g = LocalMixer::random(8, 3, rng);
    const Tensor x = random_gaussian({grid.tokens(), 8}, rng);

    const Tensor got = local_branch(x, grid, local, cfg);
    CHECK(got.shape == std::vector<std::size_t>{grid.tokens(), 8});

    // Scripted: full-width projections -> local_mix -> per-head gated path.
    auto proj = [&](Tensor GdlaHeadParams::*m) {
        return matmul(x, concat_channels(local.heads[0].*m, local.heads[1].*m));
    };
    const Tensor qp = local_mix(proj(&GdlaHeadParams::w_q), grid,
                                local.mix_q.dw_kernels, local.mix_q.pw);
    const Tensor kp = local_mix(proj(&GdlaHeadParams::w_k), grid,
                                local.mix_k.dw_kernels, local.mix_k.pw);
    const Tensor vp = local_mix(proj(&GdlaHeadParams::w_v), grid,
                                local.mix_v.dw_kernels, local.mix_v.pw);
    const Tensor gp = local_mix(proj(&GdlaHeadParams::w_g), grid,
                                local.mix_g.dw_kernels, local.mix_g.pw);
    Tensor expected;
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t c0 = i * 4, c1 = c0 + 4;
        const Tensor dla = diff_linear_attention(
            slice_cols(qp, c0, c1), slice_cols(kp, c0, c1), slice_cols(vp, c0, c1),
            local.heads[i].lambda);
        const Tensor head = hadamard(
            rmsnorm_rows(dla), activation(slice_cols(gp, c0, c1), Activation::Silu));
        expected = i == 0 ? head : concat_channels(expected, head);
    }
    CHECK(max_abs_diff(got, expected) <= 1e-12);

    CHECK_THROWS_AS(local_branch(x, GridShape{5, 4}, local, cfg), std::invalid_argument);
}

TEST_CASE("fuse: selector projections and linearity") {
    Xoshiro256ss rng(48);
    const std::size_t d = 5, n = 6;
    const Tensor g = random_gaussian({n, d}, rng);
    const Tensor l = random_gaussian({n, d}, rng);

    Tensor pick_global({2 * d, d});
    Tensor pick_local({2 * d, d});
    Tensor sum_both({2 * d, d});
    for (std::size_t i = 0; i < d; ++i) {
        pick_global.at(i, i) = 1.0;
        pick_local.at(d + i, i) = 1.0;
        sum_both.at(i, i) = 1.0;
        sum_both.at(d + i, i) = 1.0;
    }
    CHECK(max_abs_diff(fuse(g, l, pick_global), g) == 0.0);
    CHECK(max_abs_diff(fuse(g, l, pick_local), l) == 0.0);
    CHECK(max_abs_diff(fuse(g, zeros({n, d}), sum_both), g) == 0.0);

    const Tensor w = random_gaussian({2 * d, d}, rng);
    const Tensor g2 = random_gaussian({n, d}, rng);
    CHECK(max_abs_diff(fuse(add(g, g2), l, w),
                       add(fuse(g, l, w), fuse(g2, zeros({n, d}), w))) <= 1e-12);
    const Tensor l2 = random_gaussian({n, d}, rng);
    CHECK(max_abs_diff(fuse(g, add(l, l2), w),
                       add(fuse(g, l, w), fuse(zeros({n, d}), l2, w))) <= 1e-12);

    CHECK_THROWS_AS(fuse(g, Tensor({n, d + 1}), w), std::invalid_argument);
}

TEST_CASE("ffn_forward: shape law and finiteness for all kinds") {
    const GridShape grid{4, 4};
    const std::size_t d_model = 6;
    Xoshiro256ss rng(50);
    Tensor x = random_gaussian({grid.tokens(), d_model}, rng);
    for (double& v : x.data) v = std::clamp(v * 3.0, -10.0, 10.0);

    for (const FfnKind kind : {FfnKind::Mlp, FfnKind::Swiglu, FfnKind::Mixffn}) {
        FfnConfig cfg;
        cfg.kind = kind;
        const FfnWeights w = FfnWeights::random(d_model, cfg, rng);
        const Tensor y = ffn_forward(x, grid, cfg, w);
        CHECK(y.shape == std::vector<std::size_t>{grid.tokens(), d_model});
        for (double v : y.data) CHECK(std::isfinite(v));
    }
}

TEST_CASE("ffn_forward: swiglu gate-zero and mixffn G-block-zero annihilate") {
    const GridShape grid{3, 3};
    const std::size_t d_model = 4;
    Xoshiro256ss rng(52);
    const Tensor x = random_gaussian({grid.tokens(), d_model}, rng);

    FfnConfig sw;
    sw.kind = FfnKind::Swiglu;
    FfnWeights sww = FfnWeights::random(d_model, sw, rng);
    sww.gate_proj = zeros(sww.gate_proj.shape);
    CHECK(max_abs(ffn_forward(x, grid, sw, sww)) == 0.0);

    FfnConfig mx;
    mx.kind = FfnKind::Mixffn;
    FfnWeights mxw = FfnWeights::random(d_model, mx, rng);
    const std::size_t dh = mx.hidden_width(d_model);
    for (std::size_t r = 0; r < mxw.in_proj.rows(); ++r)
        for (std::size_t c = dh; c < 2 * dh; ++c) mxw.in_proj.at(r, c) = 0.0;
    CHECK(max_abs(ffn_forward(x, grid, mx, mxw)) == 0.0);
}

TEST_CASE("ffn_forward: seeded mixffn matches the scripted primitive chain") {
    const GridShape grid{4, 3};
    const std::size_t d_model = 4;
    Xoshiro256ss rng(54);
    const Tensor x = random_gaussian({grid.tokens(), d_model}, rng);
    FfnConfig cfg;
    cfg.kind = FfnKind::Mixffn;
    cfg.alpha = 2.0;
    const FfnWeights w = FfnWeights::random(d_model, cfg, rng);

    const Tensor expanded = activation(matmul(x, w.in_proj), Activation::Silu);
    const Tensor mixed = dwconv2d(expanded, grid, w.dw_kernels);
    const std::size_t dh = cfg.hidden_width(d_model);
    const Tensor x_hat = slice_cols(mixed, 0, dh);
    const Tensor gate = slice_cols(mixed, dh, 2 * dh);
    const Tensor expected =
        matmul(hadamard(x_hat, activation(gate, Activation::Silu)), w.out_proj);
    CHECK(max_abs_diff(ffn_forward(x, grid, cfg, w), expected) <= 1e-12);

    CHECK_THROWS_AS(ffn_forward(Tensor({5, d_model}), grid, cfg, w),
                    std::invalid_argument);
}

TEST_CASE("MixerWeights: local-mixer kernel is restricted to 3 or 5") {
    const HeadConfig cfg = mixer_cfg(8, 2);
    FfnConfig ffn_cfg;
    Xoshiro256ss rng(55);
    CHECK_THROWS_AS(MixerWeights::random(cfg, ffn_cfg, 7, rng), std::invalid_argument);
    CHECK_THROWS_AS(MixerWeights::zero(cfg, ffn_cfg, 1), std::invalid_argument);
    const MixerWeights w5 = MixerWeights::random(cfg, ffn_cfg, 5, rng);
    CHECK(w5.local.mix_q.dw_kernels.shape == std::vector<std::size_t>{8, 5, 5});
}

TEST_CASE("gdla_block_forward: zero weights pass the input through") {
    const GridShape grid{4, 4};
    const HeadConfig cfg = mixer_cfg(8, 2);
    FfnConfig ffn_cfg;
    ffn_cfg.kind = FfnKind::Mixffn;
    const MixerWeights w = MixerWeights::zero(cfg, ffn_cfg, 3);
    Xoshiro256ss rng(56);
    const Tensor x = random_gaussian({grid.tokens(), 8}, rng);
    CHECK(max_abs_diff(gdla_block_forward(x, grid, w, cfg, ffn_cfg), x) <= 1e-14);
}

TEST_CASE("gdla_block_forward: shape, scripted composition, determinism") {
    const GridShape grid{4, 4};
    const HeadConfig cfg = mixer_cfg(8, 2);
    FfnConfig ffn_cfg;
    ffn_cfg.kind = FfnKind::Mixffn;

    Xoshiro256ss rng(58);
    const MixerWeights w = MixerWeights::random(cfg, ffn_cfg, 3, rng);
    const Tensor x = random_gaussian({grid.tokens(), 8}, rng);

    const Tensor got = gdla_block_forward(x, grid, w, cfg, ffn_cfg);
    CHECK(got.shape == std::vector<std::size_t>{grid.tokens(), 8});

    const Tensor normed = rmsnorm_rows(x);
    const Tensor fused = fuse(gdla_multihead(normed, w.global_heads, cfg),
                              local_branch(normed, grid, w.local, cfg), w.w_fuse);
    const Tensor y1 = add(x, fused);
    const Tensor expected = add(y1, ffn_forward(rmsnorm_rows(y1), grid, ffn_cfg, w.ffn));
    CHECK(max_abs_diff(got, expected) <= 1e-11);

    // Bit-identical replay from the same seed.
    Xoshiro256ss rng2(58);
    const MixerWeights w2 = MixerWeights::random(cfg, ffn_cfg, 3, rng2);
    const Tensor x2 = random_gaussian({grid.tokens(), 8}, rng2);
    const Tensor got2 = gdla_block_forward(x2, grid, w2, cfg, ffn_cfg);
    CHECK(got.data == got2.data);

    // h*d_h != d_model is rejected at block level.
    HeadConfig bad = cfg;
    bad.d_h = 2;
    CHECK_THROWS_AS(gdla_block_forward(x, grid, w, bad, ffn_cfg),
                    std::invalid_argument);
}
