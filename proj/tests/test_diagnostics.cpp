#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gdla/diagnostics.hpp"
#include "gdla/prng.hpp"

using namespace gdla;

namespace {

double sum_of(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v;
    return s;
}

HeadConfig cfg_of(std::size_t d_model, std::size_t h, std::size_t d_h) {
    HeadConfig cfg;
    cfg.d_model = d_model;
    cfg.heads = h;
    cfg.d_h = d_h;
    return cfg;
}

}  // namespace

TEST_CASE("gradcheck: quadratic closed form recovers the gradient") {
    const Tensor theta({2}, {1.0, 2.0});
    GradCheckOptions opts;
    opts.step = 1e-4;
    const auto rep = gradcheck(
        [](const Tensor& t) { return t.data[0] * t.data[0] + t.data[1] * t.data[1]; },
        theta, opts);
    REQUIRE(rep.coords.size() == 2);
    CHECK(std::fabs(rep.coords[0].derivative - 2.0) <= 1e-8);
    CHECK(std::fabs(rep.coords[1].derivative - 4.0) <= 1e-8);
    // Central differences of a quadratic are exact: nothing resolves above the
    // noise floor and the check passes vacuously.
    CHECK(rep.smooth);
}

TEST_CASE("gradcheck: softmax-attention loss shows second-order agreement") {
    Xoshiro256ss rng(60);
    const Tensor q = random_gaussian({6, 4}, rng);
    const Tensor k = random_gaussian({6, 4}, rng);
    const Tensor v = random_gaussian({6, 4}, rng);
    GradCheckOptions opts;
    opts.seed = 60;
    const auto rep = gradcheck(
        [&](const Tensor& t) { return sum_of(softmax_attention(t, k, v)); }, q, opts);
    CHECK(rep.usable_count > 0);
    CHECK(rep.median_ratio >= 0.1);
    CHECK(rep.median_ratio <= 0.6);
    CHECK(rep.max_rel_error <= 1e-6);
}

TEST_CASE("gradcheck: a step discontinuity is reported as non-smooth") {
    const GradCheckOptions opts;  // step 1e-3
    Tensor theta({2}, {opts.step / 3.0, 1.0});
    const auto rep = gradcheck(
        [](const Tensor& t) { return t.data[0] > 0.0 ? 1.0 : 0.0; }, theta, opts);
    CHECK_FALSE(rep.smooth);
    CHECK(rep.usable_count > 0);
    const bool median_ok = rep.median_ratio >= 0.1 && rep.median_ratio <= 0.6;
    CHECK_FALSE(median_ok);
}

TEST_CASE("gradcheck: second-order agreement across the smooth primitives") {
    Xoshiro256ss rng(61);
    const GridShape grid{3, 3};
    const Tensor ker = random_gaussian({4, 3, 3}, rng);
    FfnConfig mixffn_cfg;
    mixffn_cfg.kind = FfnKind::Mixffn;
    mixffn_cfg.alpha = 2.0;
    const FfnWeights ffn_w = FfnWeights::random(4, mixffn_cfg, rng);
    const Tensor theta = random_gaussian({grid.tokens(), 4}, rng);
    const Tensor probe = random_gaussian({grid.tokens(), 4}, rng);
    const auto dot_probe = [&](const Tensor& t) { return sum_of(hadamard(probe, t)); };

    // Row sums of a softmax are constant, and convolutions are linear, so
    // those two need a probe/nonlinearity to expose curvature.
    const std::vector<std::function<double(const Tensor&)>> losses = {
        [&](const Tensor& t) { return dot_probe(softmax_rows(t)); },
        [](const Tensor& t) { return sum_of(rmsnorm_rows(t)); },
        [](const Tensor& t) { return sum_of(activation(t, Activation::Silu)); },
        [](const Tensor& t) { return sum_of(activation(t, Activation::Sigmoid)); },
        [&](const Tensor& t) {
            return sum_of(dwconv2d(activation(t, Activation::Silu), grid, ker));
        },
        [&](const Tensor& t) { return sum_of(ffn_forward(t, grid, mixffn_cfg, ffn_w)); },
    };
    for (std::size_t i = 0; i < losses.size(); ++i) {
        GradCheckOptions opts;
        opts.seed = i;
        const GradCheckReport rep = gradcheck(losses[i], theta, opts);
        CAPTURE(i);
        CHECK(rep.smooth);
        if (rep.usable_count > 0) {
            CHECK(rep.median_ratio >= 0.125);
            CHECK(rep.median_ratio <= 0.5);  // within a factor 2 of 1/4
        }
    }
}

TEST_CASE("gradcheck: non-finite evaluations are errors") {
    const Tensor theta({1}, {0.0});
    CHECK_THROWS_AS(
        gradcheck([](const Tensor&) { return std::numeric_limits<double>::infinity(); },
                  theta),
        std::domain_error);
}

TEST_CASE("equivalence_suite: single-token case is numerically exact") {
    const auto rep = equivalence_suite({0, 1, 2}, {{1, 2}});
    CHECK(rep.pass);
    CHECK(rep.max_dev <= 1e-15);
}

TEST_CASE("equivalence_suite: 100 seeds at N=8 d=4 stay under 1e-12") {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 100; ++s) seeds.push_back(s);
    const auto rep = equivalence_suite(seeds, {{8, 4}});
    CHECK(rep.cases.size() == 100);
    CHECK(rep.max_dev <= 1e-12);
}

TEST_CASE("equivalence_suite: N=256 d=16 stays under 1e-11; odd d rejected") {
    const auto rep = equivalence_suite({7}, {{256, 16}});
    CHECK(rep.pass);
    CHECK(rep.max_dev <= 1e-11);
    CHECK_THROWS_AS(equivalence_suite({0}, {{4, 3}}), std::invalid_argument);
}

TEST_CASE("equivalence_suite: failing cases flip the pass flags") {
    // Zero tolerance cannot be met by two different summation orders.
    const auto rep = equivalence_suite({0, 1}, {{16, 8}}, 0.0);
    CHECK_FALSE(rep.pass);
    bool any_case_failed = false;
    for (const auto& c : rep.cases) any_case_failed = any_case_failed || !c.pass;
    CHECK(any_case_failed);
}

TEST_CASE("flop_count: softmax doubling ratio approaches 4") {
    const HeadConfig cfg = cfg_of(64, 1, 64);
    const FfnConfig ffn;
    const auto f1 = flop_count(FlopKind::Softmax, cfg, ffn, 3, 4096).headline();
    const auto f2 = flop_count(FlopKind::Softmax, cfg, ffn, 3, 8192).headline();
    CHECK(static_cast<double>(f2) / static_cast<double>(f1) >= 3.5);
}

TEST_CASE("flop_count: linear headline doubles exactly with N") {
    const HeadConfig cfg = cfg_of(32, 4, 8);
    const FfnConfig ffn;
    for (const std::uint64_t n : {64ULL, 256ULL, 1024ULL}) {
        const auto f1 = flop_count(FlopKind::Linear, cfg, ffn, 3, n).headline();
        const auto f2 = flop_count(FlopKind::Linear, cfg, ffn, 3, 2 * n).headline();
        CHECK(f2 == 2 * f1);
    }
}

TEST_CASE("flop_count: affine / quadratic classification via second differences") {
    const HeadConfig cfg = cfg_of(32, 4, 8);
    FfnConfig ffn;
    ffn.kind = FfnKind::Mixffn;

    CHECK(flops_affine_in_n(FlopKind::Linear, cfg, ffn, 3, 64, 64));
    CHECK(flops_affine_in_n(FlopKind::GdlaBlock, cfg, ffn, 3, 64, 64));
    CHECK(flops_second_difference(FlopKind::Linear, cfg, ffn, 3, 64, 64) == 0);
    CHECK(flops_second_difference(FlopKind::GdlaBlock, cfg, ffn, 3, 64, 64) == 0);

    CHECK_FALSE(flops_affine_in_n(FlopKind::Softmax, cfg, ffn, 3, 64, 64));
    CHECK(flops_second_difference(FlopKind::Softmax, cfg, ffn, 3, 64, 64) > 0);
    CHECK(flops_second_difference(FlopKind::Diff, cfg, ffn, 3, 64, 64) > 0);

    // Exactly quadratic in N: a degree-2 fit through three points has zero
    // residual at a fourth, i.e. the third difference vanishes.
    for (const FlopKind kind : {FlopKind::Softmax, FlopKind::Diff}) {
        const auto f = [&](std::uint64_t n) {
            return static_cast<long long>(flop_count(kind, cfg, ffn, 3, n).headline());
        };
        const long long third_diff = f(256) - 3 * f(192) + 3 * f(128) - f(64);
        CHECK(third_diff == 0);
        // Quadratic coefficient read off the fit, checked against one more point.
        const long long a2 = (f(192) - 2 * f(128) + f(64)) / (2 * 64 * 64);
        CHECK(a2 > 0);
    }

    // gdla_block stage table carries every stage of both branches and the FFN.
    const auto rep = flop_count(FlopKind::GdlaBlock, cfg, ffn, 3, 256);
    CHECK(rep.headline() == rep.mul() + rep.add() + rep.div());
    CHECK(rep.stages.size() > 10);
}

TEST_CASE("flop_count: report totals are stage sums") {
    const HeadConfig cfg = cfg_of(16, 2, 8);
    const auto rep = flop_count(FlopKind::Softmax, cfg, FfnConfig{}, 3, 128);
    std::uint64_t mul = 0, add = 0, div = 0, nl = 0;
    for (const auto& s : rep.stages) {
        mul += s.mul;
        add += s.add;
        div += s.div;
        nl += s.nonlin;
    }
    CHECK(rep.mul() == mul);
    CHECK(rep.add() == add);
    CHECK(rep.div() == div);
    CHECK(rep.nonlin() == nl);
    CHECK(rep.headline() == mul + add + div);
}

TEST_CASE("token_norm_map: one-hot token, constant guard, direct recomputation") {
    const GridShape grid{2, 2};
    Tensor x({4, 3});
    x.at(2, 1) = 5.0;  // single nonzero row
    const auto map = token_norm_map(x, grid);
    CHECK(map.values == std::vector<double>{0, 0, 1, 0});

    Tensor flat({4, 3});
    for (double& v : flat.data) v = 2.0;
    const auto zero_map = token_norm_map(flat, grid);
    for (double v : zero_map.values) CHECK(v == 0.0);

    Xoshiro256ss rng(62);
    const Tensor r = random_gaussian({4, 3}, rng);
    const auto raw = token_norm_map(r, grid, MapNormalization::Raw);
    for (std::size_t i = 0; i < 4; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < 3; ++j) ss += r.at(i, j) * r.at(i, j);
        CHECK(raw.values[i] == doctest::Approx(std::sqrt(ss)).epsilon(1e-14));
    }

    CHECK_THROWS_AS(token_norm_map(Tensor({5, 3}), grid), std::invalid_argument);
}

TEST_CASE("channel_saliency_map: closed form and 1/sqrt(C) relation") {
    const GridShape grid{1, 2};
    const Tensor x({2, 2}, {3, 4, 0, 0});
    const auto raw = channel_saliency_map(x, grid, MapNormalization::Raw);
    CHECK(raw.values[0] == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));

    Xoshiro256ss rng(64);
    const GridShape g2{2, 3};
    const Tensor r = random_gaussian({6, 4}, rng);
    const auto norms = token_norm_map(r, g2, MapNormalization::Raw);
    const auto rms = channel_saliency_map(r, g2, MapNormalization::Raw);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(rms.values[i] == doctest::Approx(norms.values[i] / 2.0).epsilon(1e-14));

    Tensor flat({6, 4});
    for (double& v : flat.data) v = -1.25;
    const auto zero_map = channel_saliency_map(flat, g2);
    for (double v : zero_map.values) CHECK(v == 0.0);
}

TEST_CASE("delta_attn_map: zero update, self-difference, minmax range") {
    const GridShape grid{2, 3};
    const auto zero_map = delta_attn_map(Tensor({6, 5}), grid);
    for (double v : zero_map.values) CHECK(v == 0.0);

    Xoshiro256ss rng(66);
    const Tensor update = random_gaussian({6, 5}, rng);
    const auto map = delta_attn_map(update, grid);
    for (double v : map.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const auto diff = map_difference(map, map);
    for (double v : diff.values) CHECK(v == 0.0);
    CHECK(diff.normalization == MapNormalization::Raw);
}

TEST_CASE("delta_attn_map: GDLA and linear updates produce different maps") {
    const GridShape grid{4, 4};
    HeadConfig cfg = cfg_of(8, 2, 4);
    FfnConfig ffn_cfg;
    Xoshiro256ss rng(68);
    const Tensor x = random_gaussian({grid.tokens(), 8}, rng);

    const MixerWeights mw = MixerWeights::random(cfg, ffn_cfg, 3, rng);
    const Tensor gdla_update = gdla_mixer_update(x, grid, mw, cfg);

    const MultiHeadWeights lw = MultiHeadWeights::random(cfg, rng);
    const Tensor lin_update = linear_attention_multihead(rmsnorm_rows(x), lw, cfg);

    const auto a = delta_attn_map(gdla_update, grid);
    const auto b = delta_attn_map(lin_update, grid);
    bool differs = false;
    for (std::size_t i = 0; i < a.values.size() && !differs; ++i)
        differs = a.values[i] != b.values[i];
    CHECK(differs);

    const auto d = map_difference(a, b);
    for (double v : d.values) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}
