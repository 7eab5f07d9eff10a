#include "gdla/diagnostics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>

namespace gdla {

// ---------------------------------------------------------------------------
// FLOP accounting
// ---------------------------------------------------------------------------

namespace {

FlopStage matmul_stage(std::string name, std::uint64_t n, std::uint64_t k,
                       std::uint64_t m) {
    return {std::move(name), n * k * m, n * k * m, 0, 0};
}

FlopStage softmax_stage(std::string name, std::uint64_t rows, std::uint64_t cols) {
    // max-subtract + accumulate = 2 adds per element; exp per element; div per
    // element.
    return {std::move(name), 0, 2 * rows * cols, rows * cols, rows * cols};
}

FlopStage rmsnorm_stage(std::string name, std::uint64_t rows, std::uint64_t cols) {
    // square + rescale per element, accumulate + eps per row, sqrt + reciprocal
    // per row.
    return {std::move(name), 2 * rows * cols, rows * (cols + 1), rows, rows};
}

FlopStage silu_stage(std::string name, std::uint64_t count) {
    return {std::move(name), count, 0, 0, count};  // x * sigmoid(x)
}

// Shared stages of one kernelized diff-linear multi-head pass (both GDLA
// branches use this shape): projections excluded, gate included.
void append_gdla_core_stages(std::vector<FlopStage>& stages, const char* prefix,
                             std::uint64_t n, std::uint64_t d_k, std::uint64_t d_h) {
    const std::uint64_t half = d_h / 2;
    const std::uint64_t branches = 2 * (d_k / d_h);  // 2 per head
    auto tag = [&](const char* s) { return std::string(prefix) + s; };
    stages.push_back({tag("feature_map"), 0, 0, 0, 2 * n * d_k});  // phi(Q), phi(K)
    stages.push_back(matmul_stage(tag("kv_state"), branches * half, n, d_h));
    stages.push_back({tag("key_colsum"), 0, branches * n * half, 0, 0});
    stages.push_back(matmul_stage(tag("query_state"), branches * n, half, d_h));
    stages.push_back(matmul_stage(tag("normalizer"), branches * n, half, 1));
    stages.push_back({tag("normalize_div"), 0, 0, branches * n * d_h, 0});
    stages.push_back({tag("lambda_subtract"), n * d_k, n * d_k, 0, 0});
    stages.push_back(rmsnorm_stage(tag("head_rmsnorm"), n * (d_k / d_h), d_h));
    stages.push_back(silu_stage(tag("gate_act"), n * d_k));
    stages.push_back({tag("gate_apply"), n * d_k, 0, 0, 0});
}

void append_ffn_stages(std::vector<FlopStage>& stages, std::uint64_t n,
                       std::uint64_t d_model, const FfnConfig& ffn_cfg) {
    const std::uint64_t dh = ffn_cfg.hidden_width(d_model);
    const std::uint64_t k2 =
        static_cast<std::uint64_t>(ffn_cfg.dw_kernel) * ffn_cfg.dw_kernel;
    switch (ffn_cfg.kind) {
        case FfnKind::Mlp:
            stages.push_back(matmul_stage("ffn_in", n, d_model, dh));
            stages.push_back(silu_stage("ffn_act", n * dh));
            stages.push_back(matmul_stage("ffn_out", n, dh, d_model));
            break;
        case FfnKind::Swiglu:
            stages.push_back(matmul_stage("ffn_in", n, d_model, dh));
            stages.push_back(matmul_stage("ffn_gate_proj", n, d_model, dh));
            stages.push_back(silu_stage("ffn_act", n * dh));
            stages.push_back({"ffn_gate_apply", n * dh, 0, 0, 0});
            stages.push_back(matmul_stage("ffn_out", n, dh, d_model));
            break;
        case FfnKind::Mixffn:
            stages.push_back(matmul_stage("ffn_in", n, d_model, 2 * dh));
            stages.push_back(silu_stage("ffn_act", n * 2 * dh));
            stages.push_back({"ffn_dwconv", n * 2 * dh * k2, n * 2 * dh * k2, 0, 0});
            stages.push_back(silu_stage("ffn_gate_act", n * dh));
            stages.push_back({"ffn_gate_apply", n * dh, 0, 0, 0});
            stages.push_back(matmul_stage("ffn_out", n, dh, d_model));
            break;
    }
}

std::uint64_t stage_headline(const FlopStage& s) { return s.mul + s.add + s.div; }

}  // namespace

std::uint64_t FlopReport::mul() const {
    std::uint64_t t = 0;
    for (const auto& s : stages) t += s.mul;
    return t;
}
std::uint64_t FlopReport::add() const {
    std::uint64_t t = 0;
    for (const auto& s : stages) t += s.add;
    return t;
}
std::uint64_t FlopReport::div() const {
    std::uint64_t t = 0;
    for (const auto& s : stages) t += s.div;
    return t;
}
std::uint64_t FlopReport::nonlin() const {
    std::uint64_t t = 0;
    for (const auto& s : stages) t += s.nonlin;
    return t;
}
std::uint64_t FlopReport::headline() const { return mul() + add() + div(); }

FlopReport flop_count(FlopKind kind, const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                      std::size_t dwc_kernel, std::uint64_t n) {
    cfg.validate();
    ffn_cfg.validate();
    if (dwc_kernel % 2 == 0) throw std::invalid_argument("flop_count: even DWC kernel");

    const std::uint64_t d_model = cfg.d_model;
    const std::uint64_t h = cfg.heads;
    const std::uint64_t d_h = cfg.d_h;
    const std::uint64_t d_k = h * d_h;
    const std::uint64_t half = d_h / 2;

    FlopReport rep;
    rep.kind = kind;
    rep.n = n;
    rep.d_model = cfg.d_model;
    rep.heads = cfg.heads;
    rep.d_h = cfg.d_h;
    rep.dwc_kernel = dwc_kernel;
    auto& st = rep.stages;

    switch (kind) {
        case FlopKind::Softmax:
            st.push_back(matmul_stage("proj_qkv", n, d_model, 3 * d_k));
            st.push_back(matmul_stage("scores", h * n, d_h, n));
            st.push_back({"score_scale", h * n * n, 0, 0, 0});
            st.push_back(softmax_stage("softmax", h * n, n));
            st.push_back(matmul_stage("apply_values", h * n, n, d_h));
            st.push_back(matmul_stage("out_proj", n, d_k, d_model));
            break;

        case FlopKind::Linear:
            st.push_back(matmul_stage("proj_qkv", n, d_model, 3 * d_k));
            st.push_back({"feature_map", 0, 0, 0, 2 * n * d_k});
            st.push_back(matmul_stage("kv_state", h * d_h, n, d_h));
            st.push_back({"key_colsum", 0, n * d_k, 0, 0});
            st.push_back(matmul_stage("query_state", h * n, d_h, d_h));
            st.push_back(matmul_stage("normalizer", h * n, d_h, 1));
            st.push_back({"normalize_div", 0, 0, n * d_k, 0});
            st.push_back(matmul_stage("out_proj", n, d_k, d_model));
            break;

        case FlopKind::Diff:
            st.push_back(matmul_stage("proj_qkv", n, d_model, 3 * d_k));
            st.push_back(matmul_stage("scores", 2 * h * n, half, n));
            st.push_back({"score_scale", 2 * h * n * n, 0, 0, 0});
            st.push_back(softmax_stage("softmax", 2 * h * n, n));
            // lambda reparameterization: two exp(dot) terms, constant in n
            st.push_back({"lambda_reparam", 2 * half, 2 * half + 2, 0, 2});
            st.push_back({"map_subtract", h * n * n, h * n * n, 0, 0});
            st.push_back(matmul_stage("apply_values", h * n, n, d_h));
            st.push_back(rmsnorm_stage("head_rmsnorm", h * n, d_h));
            st.push_back({"head_rescale", n * d_k, 1, 0, 0});
            st.push_back(matmul_stage("out_proj", n, d_k, d_model));
            break;

        case FlopKind::GdlaBlock: {
            const std::uint64_t k2 =
                static_cast<std::uint64_t>(dwc_kernel) * dwc_kernel;
            st.push_back(rmsnorm_stage("block_norm1", n, d_model));
            st.push_back(matmul_stage("global_proj", n, d_model, 4 * d_k));
            append_gdla_core_stages(st, "global_", n, d_k, d_h);
            st.push_back(matmul_stage("local_proj", n, d_model, 4 * d_k));
            st.push_back({"local_dwconv", 4 * n * d_k * k2, 4 * n * d_k * k2, 0, 0});
            st.push_back(matmul_stage("local_pwconv", 4 * n, d_k, d_k));
            append_gdla_core_stages(st, "local_", n, d_k, d_h);
            st.push_back(matmul_stage("fuse", n, 2 * d_model, d_model));
            st.push_back({"residual1", 0, n * d_model, 0, 0});
            st.push_back(rmsnorm_stage("block_norm2", n, d_model));
            append_ffn_stages(st, n, d_model, ffn_cfg);
            st.push_back({"residual2", 0, n * d_model, 0, 0});
            break;
        }
    }
    return rep;
}

bool flops_affine_in_n(FlopKind kind, const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                       std::size_t dwc_kernel, std::uint64_t n_base,
                       std::uint64_t n_step) {
    const FlopReport r1 = flop_count(kind, cfg, ffn_cfg, dwc_kernel, n_base);
    const FlopReport r2 = flop_count(kind, cfg, ffn_cfg, dwc_kernel, n_base + n_step);
    const FlopReport r3 = flop_count(kind, cfg, ffn_cfg, dwc_kernel, n_base + 2 * n_step);
    for (std::size_t i = 0; i < r1.stages.size(); ++i) {
        const auto a = stage_headline(r1.stages[i]);
        const auto b = stage_headline(r2.stages[i]);
        const auto c = stage_headline(r3.stages[i]);
        if (a + c != 2 * b) return false;  // nonzero second difference
    }
    return true;
}

long long flops_second_difference(FlopKind kind, const HeadConfig& cfg,
                                  const FfnConfig& ffn_cfg, std::size_t dwc_kernel,
                                  std::uint64_t n_base, std::uint64_t n_step) {
    const auto f = [&](std::uint64_t n) {
        return flop_count(kind, cfg, ffn_cfg, dwc_kernel, n).headline();
    };
    const std::uint64_t a = f(n_base), b = f(n_base + n_step), c = f(n_base + 2 * n_step);
    return static_cast<long long>(a + c) - static_cast<long long>(2 * b);
}

const char* flop_kind_name(FlopKind kind) {
    switch (kind) {
        case FlopKind::Softmax: return "softmax";
        case FlopKind::Linear: return "linear";
        case FlopKind::Diff: return "diff";
        case FlopKind::GdlaBlock: return "gdla_block";
    }
    return "?";
}

FlopKind parse_flop_kind(const std::string& name) {
    if (name == "softmax") return FlopKind::Softmax;
    if (name == "linear") return FlopKind::Linear;
    if (name == "diff") return FlopKind::Diff;
    if (name == "gdla_block" || name == "gdla") return FlopKind::GdlaBlock;
    throw std::invalid_argument("unknown flop kind: " + name);
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

GradCheckReport gradcheck(const std::function<double(const Tensor&)>& fn,
                          const Tensor& theta, const GradCheckOptions& opts) {
    if (opts.step <= 0.0) throw std::invalid_argument("gradcheck: step must be positive");
    const std::size_t n = theta.numel();
    if (n == 0) throw std::invalid_argument("gradcheck: empty parameter tensor");

    std::vector<std::size_t> coords;
    if (n <= opts.max_coords) {
        for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
        Xoshiro256ss rng(opts.seed);
        while (coords.size() < opts.max_coords) {
            const std::size_t idx = static_cast<std::size_t>(rng.next() % n);
            if (std::find(coords.begin(), coords.end(), idx) == coords.end())
                coords.push_back(idx);
        }
    }

    GradCheckReport report;
    Tensor probe = theta;
    const auto eval_at = [&](std::size_t idx, double value) {
        const double saved = probe.data[idx];
        probe.data[idx] = value;
        const double y = fn(probe);
        probe.data[idx] = saved;
        if (!std::isfinite(y)) {
            throw std::domain_error("gradcheck: non-finite function evaluation");
        }
        return y;
    };

    std::vector<double> usable_ratios;
    for (const std::size_t idx : coords) {
        const double x0 = theta.data[idx];
        double fmax = 0.0;
        double estimates[3];
        double h = opts.step;
        for (int level = 0; level < 3; ++level, h *= 0.5) {
            const double fp = eval_at(idx, x0 + h);
            const double fm = eval_at(idx, x0 - h);
            fmax = std::max({fmax, std::fabs(fp), std::fabs(fm)});
            estimates[level] = (fp - fm) / (2.0 * h);
        }

        GradCheckCoord c;
        c.index = idx;
        c.derivative = estimates[2];
        c.delta_coarse = std::fabs(estimates[0] - estimates[1]);
        c.delta_fine = std::fabs(estimates[1] - estimates[2]);

        // Differences below the cancellation noise of the finest level carry
        // no curvature information.
        const double noise_floor =
            512.0 * DBL_EPSILON * std::max(1.0, fmax) / opts.step;
        c.usable = c.delta_coarse > noise_floor;
        if (c.usable) {
            c.ratio = c.delta_fine / c.delta_coarse;
            usable_ratios.push_back(c.ratio);
        }
        const double rel =
            c.delta_fine / std::max(1.0, std::fabs(estimates[2]));
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.coords.push_back(c);
    }

    report.usable_count = usable_ratios.size();
    if (!usable_ratios.empty()) {
        std::sort(usable_ratios.begin(), usable_ratios.end());
        const std::size_t m = usable_ratios.size();
        report.median_ratio = m % 2 == 1
                                  ? usable_ratios[m / 2]
                                  : 0.5 * (usable_ratios[m / 2 - 1] + usable_ratios[m / 2]);
    }
    report.smooth = true;
    for (const auto& c : report.coords) {
        if (c.usable && (c.ratio < opts.ratio_lo || c.ratio > opts.ratio_hi)) {
            report.smooth = false;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Equivalence suite
// ---------------------------------------------------------------------------

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    }
    return m;
}

}  // namespace

EquivReport equivalence_suite(const std::vector<std::uint64_t>& seeds,
                              const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                              double tolerance) {
    EquivReport report;
    report.tolerance = tolerance;
    for (const auto& [n, d] : sizes) {
        if (d % 2 != 0) {
            throw std::invalid_argument("equivalence_suite: d must be even");
        }
        for (const std::uint64_t seed : seeds) {
            Xoshiro256ss rng(seed);
            const Tensor q = random_gaussian({n, d}, rng);
            const Tensor k = random_gaussian({n, d}, rng);
            const Tensor v = random_gaussian({n, d}, rng);
            Tensor lambda({d});
            for (double& x : lambda.data) x = rng.uniform(-1.0, 1.0);

            double dev = max_abs_diff(
                linear_attention(q, k, v, LinearMode::Associative),
                linear_attention(q, k, v, LinearMode::Quadratic));

            auto [q1, q2] = split_halves(q);
            auto [k1, k2] = split_halves(k);
            const Tensor b1_quad = linear_attention(q1, k1, v, LinearMode::Quadratic);
            const Tensor b2_quad = linear_attention(q2, k2, v, LinearMode::Quadratic);
            dev = std::max(dev, max_abs_diff(
                linear_attention(q1, k1, v, LinearMode::Associative), b1_quad));
            dev = std::max(dev, max_abs_diff(
                linear_attention(q2, k2, v, LinearMode::Associative), b2_quad));

            // Channel-wise subtraction against the quadratic branch oracles.
            Tensor diff_quad({n, d});
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    diff_quad.at(i, j) =
                        b1_quad.at(i, j) - lambda.data[j] * b2_quad.at(i, j);
            dev = std::max(dev, max_abs_diff(diff_linear_attention(q, k, v, lambda),
                                             diff_quad));

            report.cases.push_back({seed, n, d, dev, dev <= tolerance});
            report.max_dev = std::max(report.max_dev, dev);
        }
    }
    report.pass = report.max_dev <= tolerance && !report.cases.empty();
    return report;
}

// ---------------------------------------------------------------------------
// Diagnostic maps
// ---------------------------------------------------------------------------

namespace {

DiagnosticMap make_map(std::vector<double> raw, GridShape grid,
                       MapNormalization norm) {
    DiagnosticMap map;
    map.grid = grid;
    map.normalization = norm;
    if (norm == MapNormalization::MinMax) {
        double lo = raw[0], hi = raw[0];
        for (double v : raw) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo) {
            for (double& v : raw) v = (v - lo) / (hi - lo);
        } else {
            for (double& v : raw) v = 0.0;  // constant map carries no saliency
        }
    }
    map.values = std::move(raw);
    return map;
}

std::vector<double> row_norms(const Tensor& x, GridShape grid, const char* who) {
    if (x.rows() != grid.tokens()) {
        throw std::invalid_argument(std::string(who) + ": token count != grid");
    }
    const std::size_t n = x.rows(), c = x.cols();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < c; ++j) ss += x.at(i, j) * x.at(i, j);
        out[i] = std::sqrt(ss);
    }
    return out;
}

}  // namespace

DiagnosticMap token_norm_map(const Tensor& x, GridShape grid, MapNormalization norm) {
    return make_map(row_norms(x, grid, "token_norm_map"), grid, norm);
}

DiagnosticMap delta_attn_map(const Tensor& update, GridShape grid,
                             MapNormalization norm) {
    return make_map(row_norms(update, grid, "delta_attn_map"), grid, norm);
}

DiagnosticMap channel_saliency_map(const Tensor& x, GridShape grid,
                                   MapNormalization norm) {
    std::vector<double> raw = row_norms(x, grid, "channel_saliency_map");
    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(x.cols()));
    for (double& v : raw) v *= inv_sqrt_c;
    return make_map(std::move(raw), grid, norm);
}

DiagnosticMap map_difference(const DiagnosticMap& a, const DiagnosticMap& b) {
    if (a.values.size() != b.values.size() || a.grid.height != b.grid.height ||
        a.grid.width != b.grid.width) {
        throw std::invalid_argument("map_difference: grids differ");
    }
    DiagnosticMap out;
    out.grid = a.grid;
    out.normalization = MapNormalization::Raw;
    out.values.resize(a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        out.values[i] = std::clamp(a.values[i] - b.values[i], -1.0, 1.0);
    }
    return out;
}

}  // namespace gdla
