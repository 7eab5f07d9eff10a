// Command-line front end: seeded suites, diagnostics, and benchmarks with
// byte-reproducible CSV/PGM outputs.

#include <cfloat>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "gdla/io.hpp"
#include "gdla/runner.hpp"

static_assert(std::numeric_limits<double>::is_iec559 &&
                  std::numeric_limits<double>::digits == 53,
              "IEEE-754 binary64 doubles are required for reproducible output");

namespace {

struct CliState {
    gdla::RunConfig cfg;
    std::string gate = "silu";
    std::string ffn = "mixffn";
    std::string grid = "16x16";
    std::string sizes;
    std::string n_list;
    bool out_given = false;
};

void add_common_flags(CLI::App* cmd, CliState& st) {
    cmd->add_option("--d-model", st.cfg.d_model, "model width");
    cmd->add_option("--heads", st.cfg.heads, "head count");
    cmd->add_option("--d-h", st.cfg.d_h, "per-head width (even)");
    cmd->add_option("--layer", st.cfg.layer_index, "1-based layer index");
    cmd->add_option("--gate", st.gate, "gate activation")
        ->check(CLI::IsMember({"silu", "sigmoid"}));
    cmd->add_option("--dwc-kernel", st.cfg.dwc_kernel, "local-mixer DWC kernel size")
        ->check(CLI::IsMember({3, 5}));
    cmd->add_option("--ffn", st.ffn, "feed-forward kind")
        ->check(CLI::IsMember({"mlp", "swiglu", "mixffn"}));
    cmd->add_option("--alpha", st.cfg.alpha, "FFN expansion factor");
    cmd->add_option("--grid", st.grid, "token grid as HxW");
    cmd->add_option("--seed", st.cfg.seed, "base seed (determines all inputs/weights)");
    cmd->add_option("--seeds", st.cfg.seed_count, "number of seeded cases");
    cmd->add_option("--reps", st.cfg.reps, "timed repetitions per bench point");
    cmd->add_option_function<std::string>(
        "--out", [&st](const std::string& v) { st.cfg.out_dir = v; st.out_given = true; },
        "output directory (default: $GDLA_OUT_DIR or .)");
}

}  // namespace

int main(int argc, char** argv) {
    // Reproducibility contract: no extended-precision evaluation.
    if (FLT_EVAL_METHOD != 0) {
        std::fprintf(stderr, "gdla: FLT_EVAL_METHOD=%d, need 0 for reproducible output\n",
                     FLT_EVAL_METHOD);
        return gdla::kExitCaseFailure;
    }

    CliState st;
    CLI::App app{"GDLA attention mixer: equivalence suites, diagnostics, benchmarks"};
    app.require_subcommand(1);

    CLI::App* equiv = app.add_subcommand(
        "equiv", "linear-attention associative vs quadratic equivalence suite");
    add_common_flags(equiv, st);
    equiv->add_option("--sizes", st.sizes, "comma list of NxD cases (default: full lattice)");

    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "finite-difference smoothness suite over the mixer kinds");
    add_common_flags(gradcheck, st);

    CLI::App* diag =
        app.add_subcommand("diag", "emit input-norm, delta-attn, channel-saliency PGMs");
    add_common_flags(diag, st);
    diag->add_option("--kind", st.cfg.kind, "mixer kind")
        ->check(CLI::IsMember({"softmax", "linear", "diff", "gdla"}));
    diag->add_option("--probe", st.cfg.probe, "channel-saliency probe point")
        ->check(CLI::IsMember({"input", "output"}));
    diag->add_flag("--dump-tensors", st.cfg.dump_tensors,
                   "also write input/delta-attn/output as plain-text tensors");

    CLI::App* bench = app.add_subcommand("bench", "wall-time sweep over token counts");
    add_common_flags(bench, st);
    bench->add_option("--kind", st.cfg.kind, "mixer kind")
        ->check(CLI::IsMember({"softmax", "linear", "diff", "gdla"}));
    bench->add_option("--n", st.n_list, "comma list of token counts")->required();

    CLI::App* ffncheck =
        app.add_subcommand("ffncheck", "FFN-variant shape/degeneracy suite");
    add_common_flags(ffncheck, st);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return gdla::kExitUsage;
    }

    try {
        st.cfg.gate = gdla::parse_activation(st.gate);
        st.cfg.ffn = gdla::parse_ffn_kind(st.ffn);
        st.cfg.grid = gdla::parse_grid(st.grid);
        if (!st.sizes.empty()) st.cfg.sizes = gdla::parse_sizes(st.sizes);
        if (!st.n_list.empty()) st.cfg.n_values = gdla::parse_n_list(st.n_list);
        if (!st.out_given) {
            if (const char* env = std::getenv("GDLA_OUT_DIR")) st.cfg.out_dir = env;
        }

        if (equiv->parsed()) return gdla::run_equiv(st.cfg);
        if (gradcheck->parsed()) return gdla::run_gradcheck(st.cfg);
        if (diag->parsed()) return gdla::run_diag(st.cfg);
        if (bench->parsed()) return gdla::run_bench(st.cfg);
        if (ffncheck->parsed()) return gdla::run_ffncheck(st.cfg);
    } catch (const gdla::IoError& e) {
        std::fprintf(stderr, "gdla: %s\n", e.what());
        return gdla::kExitIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "gdla: %s\n", e.what());
        return gdla::kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "gdla: %s\n", e.what());
        return gdla::kExitCaseFailure;
    }
    return gdla::kExitUsage;
}
