#pragma once

// Monte-Carlo reproduction of the calibration-vs-discrimination experiment:
// Beta-distributed confidence for correct and incorrect answers, isotonic
// recalibration, and the utility tax of an error target.

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "llmrel/calib.hpp"
#include "llmrel/core.hpp"
#include "llmrel/discrim.hpp"

namespace llmrel {

struct BetaShape {
    double alpha = 1.0;
    double beta = 1.0;

    bool operator==(const BetaShape&) const = default;
};

struct SimConfig {
    std::size_t n = 25000;
    double base_error_rate = 0.25;
    BetaShape correct_shape{1.8, 1.0};
    BetaShape incorrect_shape{1.0, 1.3};
    std::uint64_t seed = 20250101;

    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Random streams
//
// Record i draws from its own SplitMix64 stream whose state starts at
// splitmix64_mix(seed ^ splitmix64_mix(i + 1)). Uniforms take the top 53 bits
// offset by half an ulp, so they lie strictly inside (0,1). Normals use the
// cosine branch of Box-Muller. Gamma(a) uses Marsaglia-Tsang (2000) with the
// a < 1 boost Gamma(a) = Gamma(a+1) * U^(1/a). Beta(a,b) = X / (X + Y) with
// X ~ Gamma(a), Y ~ Gamma(b) drawn in that order from the same stream.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64_mix(std::uint64_t x);

class RecordStream {
public:
    RecordStream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();
    double uniform();
    double normal();
    double gamma(double shape);
    double beta(const BetaShape& shape);

private:
    std::uint64_t state_;
};

/// Exactly round(n * (1 - base_error_rate)) records labelled 1, followed by the
/// label-0 records. Bit-identical for identical configs.
std::vector<ScoredLabel> generate(const SimConfig& config);

/// Synthetic records in the JSONL schema (confidence = score, correct = label).
EvalSet to_eval_set(std::span<const ScoredLabel> pairs, const std::string& model_name = "simulated");

/// P(X > Y) for independent X ~ Beta(correct), Y ~ Beta(incorrect), by
/// adaptive quadrature of f_X(x) F_Y(x).
double beta_auroc(const BetaShape& correct, const BetaShape& incorrect);

/// One-parameter family: correct ~ Beta(1 + g, 1), incorrect ~ Beta(1, 1 + 0.375 g).
/// g = 0.8 gives the default shapes.
inline constexpr double kFamilyIncorrectSlope = 0.375;
BetaShape family_correct_shape(double gamma);
BetaShape family_incorrect_shape(double gamma);

struct FamilyMember {
    double gamma = 0.0;
    double analytic_auroc = 0.5;
    SimConfig config;
};

/// Bisection on g until beta_auroc is within `tolerance` of `target`. Other
/// fields of `base` (n, base error rate, seed) carry over.
FamilyMember find_family_for_auroc(double target, const SimConfig& base = {}, double tolerance = 5e-4);

struct Fig2Report {
    SimConfig config;
    double auroc_raw = 0.0;
    double auroc_analytic = 0.0;
    double smece_raw = 0.0;
    double sigma_raw = 0.0;
    // Two-fold cross-fitted: each half is recalibrated by the fit on the other
    // half. The in-sample value is zero up to rounding, since every isotonic
    // block's residuals sum to zero.
    double smece_calibrated = 0.0;
    double sigma_calibrated = 0.0;
    double smece_calibrated_in_sample = 0.0;
    double ece_calibrated = 0.0;
    std::size_t isotonic_blocks = 0;
    ReliabilityBins reliability;  // calibrated scores
    std::vector<std::size_t> hist_correct;    // aligned with reliability bins
    std::vector<std::size_t> hist_incorrect;
    TradeoffCurve curve;  // calibrated scores
    std::map<double, OperatingPoint> tax_at_targets;
};

struct Fig2Options {
    std::vector<double> targets{0.05};
    std::size_t bins = kDefaultEceBins;
};

/// generate -> fit_isotonic -> apply_isotonic -> smECE, tradeoff curve, and the
/// utility tax at each target. The curve and reliability bins use the fit on
/// the full draw.
Fig2Report run_fig2_pipeline(const SimConfig& config, const Fig2Options& options = {});

}  // namespace llmrel
