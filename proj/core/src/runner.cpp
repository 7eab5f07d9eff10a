#include "gdla/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "gdla/io.hpp"

namespace gdla {

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(IoError::Kind::FileFailure, "cannot create " + dir);
}

std::size_t parse_positive(const std::string& text, const char* what) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(what) + ": expected a number, got '" + text + "'");
    }
    if (used != text.size() || v < 1) {
        throw std::invalid_argument(std::string(what) + ": expected a positive integer, got '" +
                                    text + "'");
    }
    return static_cast<std::size_t>(v);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    return parts;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// One mixer update (pre-residual) on pre-norm input for any of the four kinds.
struct DiagForward {
    Tensor update;  // N x d_model
    Tensor output;  // X + update
};

DiagForward diag_forward(const std::string& kind, const Tensor& x, GridShape grid,
                         const HeadConfig& head_cfg, const FfnConfig& ffn_cfg,
                         std::size_t dwc_kernel, Xoshiro256ss& rng) {
    DiagForward fwd;
    if (kind == "softmax") {
        const auto w = MultiHeadWeights::random(head_cfg, rng);
        fwd.update = softmax_attention_multihead(rmsnorm_rows(x), w, head_cfg);
    } else if (kind == "linear") {
        const auto w = MultiHeadWeights::random(head_cfg, rng);
        fwd.update = linear_attention_multihead(rmsnorm_rows(x), w, head_cfg);
    } else if (kind == "diff") {
        const auto w = DiffAttnWeights::random(head_cfg, rng);
        fwd.update = diff_attention_multihead(rmsnorm_rows(x), w, head_cfg);
    } else if (kind == "gdla") {
        const auto w = MixerWeights::random(head_cfg, ffn_cfg, dwc_kernel, rng);
        fwd.update = gdla_mixer_update(x, grid, w, head_cfg);
    } else {
        throw std::invalid_argument("unknown mixer kind: " + kind);
    }
    fwd.output = add(x, fwd.update);
    return fwd;
}

}  // namespace

HeadConfig RunConfig::head_config() const {
    HeadConfig h;
    h.d_model = d_model;
    h.heads = heads;
    h.d_h = d_h;
    h.layer_index = layer_index;
    h.gate_kind = gate;
    h.feature_map = Activation::Elu1;
    return h;
}

FfnConfig RunConfig::ffn_config() const {
    FfnConfig f;
    f.kind = ffn;
    f.alpha = alpha;
    f.dw_kernel = 3;
    return f;
}

std::vector<std::pair<std::size_t, std::size_t>> default_equiv_sizes() {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    for (std::size_t n : {1, 2, 4, 8, 16, 64, 256})
        for (std::size_t d : {2, 4, 8, 16}) sizes.emplace_back(n, d);
    return sizes;
}

GridShape parse_grid(const std::string& text) {
    const auto parts = split(text, 'x');
    if (parts.size() != 2) throw std::invalid_argument("grid: expected HxW, got '" + text + "'");
    return {parse_positive(parts[0], "grid height"), parse_positive(parts[1], "grid width")};
}

std::vector<std::pair<std::size_t, std::size_t>> parse_sizes(const std::string& text) {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    for (const auto& item : split(text, ',')) {
        const auto parts = split(item, 'x');
        if (parts.size() != 2) {
            throw std::invalid_argument("sizes: expected NxD items, got '" + item + "'");
        }
        sizes.emplace_back(parse_positive(parts[0], "size N"),
                           parse_positive(parts[1], "size d"));
    }
    if (sizes.empty()) throw std::invalid_argument("sizes: empty list");
    return sizes;
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
    std::vector<std::size_t> ns;
    for (const auto& item : split(text, ',')) ns.push_back(parse_positive(item, "n"));
    if (ns.empty()) throw std::invalid_argument("n list: empty");
    return ns;
}

GridShape near_square_grid(std::size_t n) {
    if (n == 0) throw std::invalid_argument("near_square_grid: n must be positive");
    std::size_t h = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (h > 1 && n % h != 0) --h;
    return {h, n / h};
}

int run_equiv(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < cfg.seed_count; ++i) seeds.push_back(cfg.seed + i);
    const auto sizes = cfg.sizes.empty() ? default_equiv_sizes() : cfg.sizes;
    const EquivReport report = equivalence_suite(seeds, sizes);

    std::ostringstream csv;
    csv << "kind,n,d,seed,max_dev,pass\n";
    for (const auto& c : report.cases) {
        csv << "equiv," << c.n << "," << c.d << "," << c.seed << ","
            << format_double(c.max_dev) << "," << (c.pass ? 1 : 0) << "\n";
    }
    write_text_file(join_path(cfg.out_dir, "equiv.csv"), csv.str());
    return report.pass ? kExitOk : kExitCaseFailure;
}

int run_gradcheck(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);

    // Small fixed instances keep the 6-evaluation-per-coordinate cost trivial.
    HeadConfig block_cfg;
    block_cfg.d_model = 8;
    block_cfg.heads = 2;
    block_cfg.d_h = 4;
    block_cfg.layer_index = cfg.layer_index;
    block_cfg.gate_kind = cfg.gate;
    const GridShape block_grid{4, 4};
    FfnConfig ffn_cfg = cfg.ffn_config();
    const std::size_t n = 8, d = 8;

    std::ostringstream csv;
    csv << "loss,seed,coords,usable,median_ratio,max_rel_err,pass\n";
    bool all_pass = true;

    for (std::size_t s = 0; s < cfg.seed_count; ++s) {
        const std::uint64_t seed = cfg.seed + s;
        Xoshiro256ss rng(seed);
        const Tensor q = random_gaussian({n, d}, rng);
        const Tensor k = random_gaussian({n, d}, rng);
        const Tensor v = random_gaussian({n, d}, rng);
        const auto params = DiffAttnParams::random(d, cfg.layer_index, rng);
        const Tensor x_block = random_gaussian({block_grid.tokens(), block_cfg.d_model}, rng);
        const auto mixer = MixerWeights::random(block_cfg, ffn_cfg, cfg.dwc_kernel, rng);

        const auto sum_of = [](const Tensor& t) {
            double s = 0.0;
            for (double vv : t.data) s += vv;
            return s;
        };
        struct Loss {
            const char* name;
            std::function<double(const Tensor&)> fn;
            const Tensor* theta;
        };
        const std::vector<Loss> losses = {
            {"softmax",
             [&](const Tensor& t) { return sum_of(softmax_attention(t, k, v)); }, &q},
            {"linear",
             [&](const Tensor& t) {
                 return sum_of(linear_attention(t, k, v, LinearMode::Associative));
             },
             &q},
            {"diff", [&](const Tensor& t) { return sum_of(diff_attention(t, k, v, params)); },
             &q},
            {"gdla_block",
             [&](const Tensor& t) {
                 return sum_of(gdla_block_forward(t, block_grid, mixer, block_cfg, ffn_cfg));
             },
             &x_block},
        };

        for (const auto& loss : losses) {
            GradCheckOptions opts;
            opts.seed = seed;
            const GradCheckReport rep = gradcheck(loss.fn, *loss.theta, opts);
            const bool pass = rep.usable_count == 0 ||
                              (rep.median_ratio >= opts.ratio_lo &&
                               rep.median_ratio <= opts.ratio_hi);
            all_pass = all_pass && pass;
            csv << loss.name << "," << seed << "," << rep.coords.size() << ","
                << rep.usable_count << "," << format_double(rep.median_ratio) << ","
                << format_double(rep.max_rel_error) << "," << (pass ? 1 : 0) << "\n";
        }
    }
    write_text_file(join_path(cfg.out_dir, "gradcheck.csv"), csv.str());
    return all_pass ? kExitOk : kExitCaseFailure;
}

int run_diag(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    const HeadConfig head_cfg = cfg.head_config();
    const FfnConfig ffn_cfg = cfg.ffn_config();
    if (cfg.probe != "input" && cfg.probe != "output") {
        throw std::invalid_argument("probe must be 'input' or 'output'");
    }

    Xoshiro256ss rng(cfg.seed);
    const Tensor x = random_gaussian({cfg.grid.tokens(), cfg.d_model}, rng);
    const DiagForward fwd =
        diag_forward(cfg.kind, x, cfg.grid, head_cfg, ffn_cfg, cfg.dwc_kernel, rng);
    const Tensor& saliency_src = cfg.probe == "input" ? x : fwd.output;

    write_pgm(token_norm_map(x, cfg.grid), join_path(cfg.out_dir, "input_norm.pgm"));
    write_pgm(delta_attn_map(fwd.update, cfg.grid),
              join_path(cfg.out_dir, "delta_attn.pgm"));
    write_pgm(channel_saliency_map(saliency_src, cfg.grid),
              join_path(cfg.out_dir, "channel_saliency.pgm"));
    if (cfg.dump_tensors) {
        write_tensor(x, join_path(cfg.out_dir, "input.txt"));
        write_tensor(fwd.update, join_path(cfg.out_dir, "delta_attn.txt"));
        write_tensor(fwd.output, join_path(cfg.out_dir, "output.txt"));
    }
    return kExitOk;
}

int run_bench(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    if (cfg.n_values.empty()) throw std::invalid_argument("bench: empty N sweep");
    if (cfg.reps < 1) throw std::invalid_argument("bench: reps must be >= 1");
    const HeadConfig head_cfg = cfg.head_config();
    const FfnConfig ffn_cfg = cfg.ffn_config();
    const FlopKind flop_kind = parse_flop_kind(cfg.kind);

    std::ostringstream csv;
    csv << "kind,n,d_model,heads,d_h,reps,t_min_s,t_median_s,flops,flops_per_s,"
           "t_ratio_vs_prev\n";
    double prev_median = 0.0;
    std::size_t prev_n = 0;
    double sink = 0.0;

    for (std::size_t idx = 0; idx < cfg.n_values.size(); ++idx) {
        const std::size_t n = cfg.n_values[idx];
        Xoshiro256ss rng(cfg.seed + idx);
        const Tensor x = random_gaussian({n, cfg.d_model}, rng);
        const GridShape grid = near_square_grid(n);

        std::function<Tensor()> forward;
        if (cfg.kind == "softmax") {
            auto w = MultiHeadWeights::random(head_cfg, rng);
            forward = [&, w] { return softmax_attention_multihead(x, w, head_cfg); };
        } else if (cfg.kind == "linear") {
            auto w = MultiHeadWeights::random(head_cfg, rng);
            forward = [&, w] { return linear_attention_multihead(x, w, head_cfg); };
        } else if (cfg.kind == "diff") {
            auto w = DiffAttnWeights::random(head_cfg, rng);
            forward = [&, w] { return diff_attention_multihead(x, w, head_cfg); };
        } else if (cfg.kind == "gdla" || cfg.kind == "gdla_block") {
            auto w = MixerWeights::random(head_cfg, ffn_cfg, cfg.dwc_kernel, rng);
            forward = [&, w] {
                return gdla_block_forward(x, grid, w, head_cfg, ffn_cfg);
            };
        } else {
            throw std::invalid_argument("unknown bench kind: " + cfg.kind);
        }

        sink += forward().data[0];  // warmup
        std::vector<double> times;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const Tensor y = forward();
            const auto t1 = std::chrono::steady_clock::now();
            sink += y.data[0];
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        const double t_min = *std::min_element(times.begin(), times.end());
        const double t_median = median_of(times);
        if (!(t_median >= t_min && t_min > 0.0)) {
            throw std::domain_error("bench: timing invariant violated (median >= min > 0)");
        }
        const std::uint64_t flops =
            flop_count(flop_kind, head_cfg, ffn_cfg, cfg.dwc_kernel, n).headline();

        csv << cfg.kind << "," << n << "," << cfg.d_model << "," << cfg.heads << ","
            << cfg.d_h << "," << cfg.reps << "," << format_double(t_min) << ","
            << format_double(t_median) << "," << flops << ","
            << format_double(static_cast<double>(flops) / t_median) << ",";
        if (prev_n != 0 && n == 2 * prev_n && prev_median > 0.0) {
            csv << format_double(t_median / prev_median);
        }
        csv << "\n";
        prev_n = n;
        prev_median = t_median;
    }
    if (!std::isfinite(sink)) {  // keeps the timed forwards observable
        throw std::domain_error("bench: non-finite checksum");
    }
    write_text_file(join_path(cfg.out_dir, "bench.csv"), csv.str());
    return kExitOk;
}

int run_ffncheck(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    const std::size_t n = cfg.grid.tokens();
    std::ostringstream csv;
    csv << "ffn,n,d_model,check,value,pass\n";
    bool all_pass = true;

    for (const FfnKind kind : {FfnKind::Mlp, FfnKind::Swiglu, FfnKind::Mixffn}) {
        FfnConfig fc = cfg.ffn_config();
        fc.kind = kind;
        Xoshiro256ss rng(cfg.seed);
        Tensor x = random_gaussian({n, cfg.d_model}, rng);
        for (double& v : x.data) v = std::clamp(v, -10.0, 10.0);
        const auto weights = FfnWeights::random(cfg.d_model, fc, rng);

        const auto emit = [&](const char* check, double value, bool pass) {
            all_pass = all_pass && pass;
            csv << ffn_kind_name(kind) << "," << n << "," << cfg.d_model << "," << check
                << "," << format_double(value) << "," << (pass ? 1 : 0) << "\n";
        };

        const Tensor y = ffn_forward(x, cfg.grid, fc, weights);
        emit("shape", static_cast<double>(y.cols()),
             y.rows() == n && y.cols() == cfg.d_model);
        double max_abs = 0.0;
        bool finite = true;
        for (double v : y.data) {
            finite = finite && std::isfinite(v);
            max_abs = std::max(max_abs, std::fabs(v));
        }
        emit("finite", max_abs, finite);

        // Degeneracy: annihilate the multiplicative path per kind.
        FfnWeights degenerate = weights;
        if (kind == FfnKind::Mlp) {
            degenerate.out_proj = zeros(degenerate.out_proj.shape);
        } else if (kind == FfnKind::Swiglu) {
            degenerate.gate_proj = zeros(degenerate.gate_proj.shape);
        } else {
            // zero the G half of the expansion so SiLU(G) == 0
            const std::size_t dh = fc.hidden_width(cfg.d_model);
            for (std::size_t r = 0; r < degenerate.in_proj.rows(); ++r)
                for (std::size_t c = dh; c < 2 * dh; ++c) degenerate.in_proj.at(r, c) = 0.0;
        }
        const Tensor yz = ffn_forward(x, cfg.grid, fc, degenerate);
        double max_zero = 0.0;
        for (double v : yz.data) max_zero = std::max(max_zero, std::fabs(v));
        emit("degenerate_zero", max_zero, max_zero == 0.0);
    }
    write_text_file(join_path(cfg.out_dir, "ffncheck.csv"), csv.str());
    return all_pass ? kExitOk : kExitCaseFailure;
}

}  // namespace gdla
