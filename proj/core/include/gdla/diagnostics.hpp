#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gdla/mixer.hpp"
#include "gdla/tensor.hpp"

namespace gdla {

// ---------------------------------------------------------------------------
// Analytic FLOP accounting
// ---------------------------------------------------------------------------

enum class FlopKind { Softmax, Linear, Diff, GdlaBlock };

struct FlopStage {
    std::string name;
    std::uint64_t mul = 0;
    std::uint64_t add = 0;
    std::uint64_t div = 0;
    std::uint64_t nonlin = 0;  // exp/sigmoid/sqrt evaluations, reported separately
};

// Closed-form operation counts for one forward pass at token count n. A
// multiply-add is two FLOPs (accumulators count the add into zero as an add);
// nonlinearity evaluations are excluded from the headline total.
struct FlopReport {
    FlopKind kind;
    std::uint64_t n = 0;
    std::size_t d_model = 0, heads = 0, d_h = 0, dwc_kernel = 0;
    std::vector<FlopStage> stages;

    std::uint64_t mul() const;
    std::uint64_t add() const;
    std::uint64_t div() const;
    std::uint64_t nonlin() const;
    std::uint64_t headline() const;  // mul + add + div
};

FlopReport flop_count(FlopKind kind, const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                      std::size_t dwc_kernel, std::uint64_t n_tokens);

// True iff every stage's headline count is affine in n: zero second difference
// across three equally spaced token counts, exact in integer arithmetic.
bool flops_affine_in_n(FlopKind kind, const HeadConfig& cfg, const FfnConfig& ffn_cfg,
                       std::size_t dwc_kernel, std::uint64_t n_base,
                       std::uint64_t n_step);

// Headline second difference at (n, n+step, n+2*step); positive means a
// quadratic term is present. Signed (exact).
long long flops_second_difference(FlopKind kind, const HeadConfig& cfg,
                                  const FfnConfig& ffn_cfg, std::size_t dwc_kernel,
                                  std::uint64_t n_base, std::uint64_t n_step);

const char* flop_kind_name(FlopKind kind);
FlopKind parse_flop_kind(const std::string& name);

// ---------------------------------------------------------------------------
// Finite-difference smoothness checks
// ---------------------------------------------------------------------------

struct GradCheckOptions {
    double step = 1e-3;        // coarsest step; levels step, step/2, step/4
    std::size_t max_coords = 12;
    std::uint64_t seed = 0;    // coordinate sampling
    double ratio_lo = 0.1;     // acceptance band around the ideal 1/4
    double ratio_hi = 0.6;
};

struct GradCheckCoord {
    std::size_t index = 0;
    double derivative = 0.0;    // finest central-difference estimate
    double delta_coarse = 0.0;  // |D(h) - D(h/2)|
    double delta_fine = 0.0;    // |D(h/2) - D(h/4)|
    double ratio = 0.0;         // delta_fine / delta_coarse, ~1/4 when C^3
    bool usable = false;        // false when differences sit at fp noise
};

struct GradCheckReport {
    std::vector<GradCheckCoord> coords;
    double median_ratio = 0.25;    // over usable coords; 0.25 when none resolve
    double max_rel_error = 0.0;    // max |D(h/2)-D(h/4)| / max(1, |D(h/4)|)
    std::size_t usable_count = 0;
    bool smooth = false;           // every usable ratio inside [lo, hi]
};

// Central differences at three step levels on a random subset of coordinates.
// fn must be finite within a `step`-neighborhood of theta.
GradCheckReport gradcheck(const std::function<double(const Tensor&)>& fn,
                          const Tensor& theta, const GradCheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Associativity equivalence harness
// ---------------------------------------------------------------------------

struct EquivCase {
    std::uint64_t seed = 0;
    std::size_t n = 0, d = 0;
    double max_dev = 0.0;
    bool pass = false;
};

struct EquivReport {
    std::vector<EquivCase> cases;
    double max_dev = 0.0;
    double tolerance = 1e-11;
    bool pass = false;
};

// For each (size, seed): linear attention associative vs quadratic deviation,
// plus each diff-linear branch against its quadratic oracle; the case records
// the max over the three.
EquivReport equivalence_suite(const std::vector<std::uint64_t>& seeds,
                              const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                              double tolerance = 1e-11);

// ---------------------------------------------------------------------------
// Diagnostic maps
// ---------------------------------------------------------------------------

enum class MapNormalization { Raw, MinMax };

struct DiagnosticMap {
    GridShape grid;
    std::vector<double> values;  // one per token, row-major
    MapNormalization normalization = MapNormalization::MinMax;
};

// Per-token L2 norm over channels. MinMax maps constant inputs to all zeros.
DiagnosticMap token_norm_map(const Tensor& x, GridShape grid,
                             MapNormalization norm = MapNormalization::MinMax);

// Per-token L2 norm of the pre-residual mixer update.
DiagnosticMap delta_attn_map(const Tensor& update, GridShape grid,
                             MapNormalization norm = MapNormalization::MinMax);

// Per-token RMS over channels (token-norm / sqrt(C) before normalization).
DiagnosticMap channel_saliency_map(const Tensor& x, GridShape grid,
                                   MapNormalization norm = MapNormalization::MinMax);

// a - b per token, clipped to [-1, 1]; inputs are normalized maps.
DiagnosticMap map_difference(const DiagnosticMap& a, const DiagnosticMap& b);

}  // namespace gdla
