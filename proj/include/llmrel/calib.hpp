#pragma once

// Calibration measurement: reliability bins, ECE, smoothed ECE, and isotonic
// recalibration by pool-adjacent-violators.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "llmrel/core.hpp"

namespace llmrel {

/// A confidence score paired with a binary outcome (1 = correct).
struct ScoredLabel {
    double score = 0.0;
    int label = 0;

    bool operator==(const ScoredLabel&) const = default;
};

struct ReliabilityBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    // Unset when the bin is empty.
    std::optional<double> mean_confidence;
    std::optional<double> mean_accuracy;
};

struct ReliabilityBins {
    std::vector<ReliabilityBin> bins;

    std::size_t total() const noexcept;
};

inline constexpr std::size_t kDefaultEceBins = 15;

/// Equal-width bins over [0,1]; a score of exactly 1 falls in the last bin.
ReliabilityBins reliability_bins(std::span<const ScoredLabel> pairs, std::size_t bin_count = kDefaultEceBins);

/// Count-weighted mean absolute gap between accuracy and confidence.
double ece(const ReliabilityBins& bins);

// ---------------------------------------------------------------------------
// Smoothed ECE
//
// The residuals (label - score) are smoothed with a Gaussian kernel reflected
// at both ends of [0,1] and the absolute smoothed residual is integrated:
//
//   smECE_s = (1/n) * integral_0^1 | sum_i (y_i - f_i) K_s(f_i, t) | dt
//
// The reported bandwidth is the fixed point smECE_s = s. Integration uses the
// trapezoid rule on a uniform grid; each score's residual is split linearly
// between its two neighbouring grid nodes, so every kernel evaluation is a
// function of a grid offset.
// ---------------------------------------------------------------------------

struct SmoothEceOptions {
    std::size_t grid_points = 2001;
    double sigma_min = 1e-4;
    double sigma_max = 1.0;
    std::size_t bisection_iterations = 40;
    // Log-spaced probes used to locate the first sign change of smECE_s - s.
    std::size_t bracket_probes = 48;
};

struct SmoothEce {
    double value = 0.0;
    double sigma_star = 0.0;
};

/// smECE at a fixed bandwidth. Diagnostic entry point.
double smooth_ece_at(std::span<const ScoredLabel> pairs, double sigma, const SmoothEceOptions& opts = {});

/// smECE at its fixed-point bandwidth. Throws when no crossing can be bracketed.
SmoothEce smooth_ece(std::span<const ScoredLabel> pairs, const SmoothEceOptions& opts = {});

/// Trapezoid mass over [0,1] of the discretised reflected kernel centred at
/// `center`. Equals 1 up to rounding.
double reflected_kernel_mass(double center, double sigma, std::size_t grid_points = 2001);

// ---------------------------------------------------------------------------
// Isotonic regression
// ---------------------------------------------------------------------------

struct IsotonicBlock {
    double score_lo = 0.0;
    double score_hi = 0.0;
    double value = 0.0;
    std::size_t weight = 0;  // training points pooled into the block

    bool operator==(const IsotonicBlock&) const = default;
};

/// Monotone step function. Blocks are sorted by score and have strictly
/// increasing values.
class IsotonicFit {
public:
    IsotonicFit() = default;
    explicit IsotonicFit(std::vector<IsotonicBlock> blocks);

    const std::vector<IsotonicBlock>& blocks() const noexcept { return blocks_; }
    bool empty() const noexcept { return blocks_.empty(); }

    /// Value of the block containing `score`. Scores between two blocks take
    /// the lower block's value; scores outside the fitted range clamp.
    double operator()(double score) const;

private:
    std::vector<IsotonicBlock> blocks_;
};

/// Least-squares monotone fit of labels ordered by score. Identical scores are
/// pooled into a single block before violators are merged.
IsotonicFit fit_isotonic(std::span<const ScoredLabel> pairs);

std::vector<double> apply_isotonic(const IsotonicFit& fit, std::span<const double> scores);

struct CalibrationReport {
    double ece = 0.0;
    double smece = 0.0;
    double sigma_star = 0.0;
    ReliabilityBins bins;
};

CalibrationReport calibration_report(std::span<const ScoredLabel> pairs, std::size_t bin_count = kDefaultEceBins);

/// Pairs from records that carry a confidence and a known correctness label.
std::vector<ScoredLabel> scored_labels(const EvalSet& set);

}  // namespace llmrel
