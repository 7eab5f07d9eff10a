#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdla/diagnostics.hpp"
#include "gdla/mixer.hpp"

namespace gdla {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCaseFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

// Flat configuration shared by every subcommand; the seed fully determines all
// generated inputs and weights.
struct RunConfig {
    std::string kind = "gdla";  // diag/bench: softmax | linear | diff | gdla
    std::size_t d_model = 32;
    std::size_t heads = 4;
    std::size_t d_h = 8;
    std::size_t layer_index = 1;
    Activation gate = Activation::Silu;
    std::size_t dwc_kernel = 3;
    FfnKind ffn = FfnKind::Mixffn;
    double alpha = 4.0;
    GridShape grid{16, 16};
    std::vector<std::pair<std::size_t, std::size_t>> sizes;  // equiv (N, d) cases
    std::size_t seed_count = 10;
    std::vector<std::size_t> n_values;  // bench sweep
    std::uint64_t seed = 0;
    std::size_t reps = 5;
    std::string out_dir = ".";
    std::string probe = "output";  // channel-saliency probe: input | output
    bool dump_tensors = false;     // diag: also write the probed tensors as text

    HeadConfig head_config() const;
    FfnConfig ffn_config() const;
};

// The (N, d) lattice used when `equiv` gets no --sizes flag.
std::vector<std::pair<std::size_t, std::size_t>> default_equiv_sizes();

// Writes equiv.csv; exit 1 if any case deviates beyond 1e-11.
int run_equiv(const RunConfig& cfg);

// Finite-difference smoothness over scalar losses for the four mixer kinds;
// writes gradcheck.csv; exit 1 if any case's median ratio leaves [0.1, 0.6].
int run_gradcheck(const RunConfig& cfg);

// Writes input_norm.pgm, delta_attn.pgm, channel_saliency.pgm for cfg.kind.
int run_diag(const RunConfig& cfg);

// Times the configured forward over the N sweep; writes bench.csv.
int run_bench(const RunConfig& cfg);

// Shape/degeneracy suite across the three FFN kinds; writes ffncheck.csv.
int run_ffncheck(const RunConfig& cfg);

// "HxW" -> GridShape; "8x4,16x8" -> {(8,4),(16,8)}; "1024,2048" -> {1024,2048}.
GridShape parse_grid(const std::string& text);
std::vector<std::pair<std::size_t, std::size_t>> parse_sizes(const std::string& text);
std::vector<std::size_t> parse_n_list(const std::string& text);

// Largest H <= sqrt(n) dividing n, paired with W = n / H (bench grids).
GridShape near_square_grid(std::size_t n);

}  // namespace gdla
