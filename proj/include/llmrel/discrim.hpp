#pragma once

// Discrimination: AUROC, ROC curves, and the utility-error tradeoff obtained by
// abstaining below a confidence threshold.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "llmrel/calib.hpp"

namespace llmrel {

/// Mann-Whitney estimate of P(correct score > incorrect score), ties count 1/2.
/// Throws when either class is empty.
double auroc(std::span<const double> correct_scores, std::span<const double> incorrect_scores);
double auroc(std::span<const ScoredLabel> pairs);

struct RocPoint {
    double threshold = 0.0;  // records with score >= threshold are predicted correct
    double false_positive_rate = 0.0;
    double true_positive_rate = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;

    /// Trapezoid area under the curve.
    double area() const;
};

RocCurve roc_curve(std::span<const ScoredLabel> pairs);

/// Threshold used for the all-abstain endpoint of a tradeoff curve.
inline constexpr double kAbstainAllThreshold = 1.0 + 1e-9;

struct TradeoffPoint {
    double threshold = 0.0;
    double coverage = 0.0;     // fraction of all records attempted
    double utility = 0.0;      // fraction of all records answered correctly
    double total_error = 0.0;  // fraction of all records answered incorrectly
    std::optional<double> attempted_error;   // unset when coverage is 0
    std::optional<double> discard_fraction;  // 1 - utility/utility(0); unset when utility(0) is 0
    std::size_t attempted_n = 0;
    std::size_t correct_n = 0;
};

/// Points are sorted by threshold; the first has threshold 0 and full coverage,
/// the last abstains on everything.
struct TradeoffCurve {
    std::vector<TradeoffPoint> points;
    std::size_t n = 0;
};

/// One point at 0, one per distinct score, and one above 1. A record is
/// attempted iff score >= threshold.
TradeoffCurve tradeoff_curve(std::span<const ScoredLabel> pairs);

struct OperatingPoint {
    double target_error = 0.0;
    double threshold = 0.0;
    double utility = 0.0;
    double total_error = 0.0;
    double coverage = 0.0;
    double discard_fraction = 0.0;
    bool feasible = false;
};

/// Smallest threshold whose total error is within `target_error`. The operating
/// point is feasible only if it still attempts at least one record; otherwise
/// the all-abstain point is returned with feasible = false. Throws when the
/// curve has no correct answers at threshold 0.
OperatingPoint utility_tax(const TradeoffCurve& curve, double target_error);

}  // namespace llmrel
