#include "llmrel/discrim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

namespace llmrel {

namespace {

struct Tagged {
    double score;
    bool positive;
};

// Twice the Mann-Whitney U statistic, so that ties stay integral.
std::uint64_t twice_u(std::vector<Tagged> all) {
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });
    std::uint64_t negatives_below = 0;
    std::uint64_t twice = 0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::uint64_t pos = 0, neg = 0;
        const double s = all[i].score;
        for (; i < all.size() && all[i].score == s; ++i) (all[i].positive ? pos : neg)++;
        twice += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
    }
    return twice;
}

void check_finite(std::span<const double> xs, const char* what) {
    for (double x : xs)
        if (!std::isfinite(x)) throw Error(fmt::format("auroc: non-finite {} score", what));
}

}  // namespace

double auroc(std::span<const double> correct_scores, std::span<const double> incorrect_scores) {
    if (correct_scores.empty()) throw EmptyInput("auroc: no correct scores");
    if (incorrect_scores.empty()) throw EmptyInput("auroc: no incorrect scores");
    check_finite(correct_scores, "correct");
    check_finite(incorrect_scores, "incorrect");

    std::vector<Tagged> all;
    all.reserve(correct_scores.size() + incorrect_scores.size());
    for (double s : correct_scores) all.push_back({s, true});
    for (double s : incorrect_scores) all.push_back({s, false});
    const double pairs = static_cast<double>(correct_scores.size()) * static_cast<double>(incorrect_scores.size());
    return static_cast<double>(twice_u(std::move(all))) / (2.0 * pairs);
}

double auroc(std::span<const ScoredLabel> pairs) {
    std::vector<double> pos, neg;
    for (const auto& p : pairs) (p.label == 1 ? pos : neg).push_back(p.score);
    return auroc(pos, neg);
}

double RocCurve::area() const {
    double a = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& p = points[i - 1];
        const auto& q = points[i];
        a += (q.false_positive_rate - p.false_positive_rate) * (q.true_positive_rate + p.true_positive_rate) * 0.5;
    }
    return a;
}

RocCurve roc_curve(std::span<const ScoredLabel> pairs) {
    std::size_t npos = 0, nneg = 0;
    for (const auto& p : pairs) {
        if (!std::isfinite(p.score)) throw Error("roc_curve: non-finite score");
        (p.label == 1 ? npos : nneg)++;
    }
    if (npos == 0 || nneg == 0) throw EmptyInput("roc_curve needs both classes");

    std::vector<ScoredLabel> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < sorted.size()) {
        const double s = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == s; ++i) (sorted[i].label == 1 ? tp : fp)++;
        curve.points.push_back(
            {s, static_cast<double>(fp) / static_cast<double>(nneg), static_cast<double>(tp) / static_cast<double>(npos)});
    }
    return curve;
}

TradeoffCurve tradeoff_curve(std::span<const ScoredLabel> pairs) {
    if (pairs.empty()) throw EmptyInput("tradeoff_curve");
    for (const auto& p : pairs) {
        if (!(p.score >= 0.0 && p.score <= 1.0)) throw Error(fmt::format("tradeoff_curve: score {} outside [0,1]", p.score));
        if (p.label != 0 && p.label != 1) throw Error("tradeoff_curve: labels must be 0/1");
    }

    std::vector<ScoredLabel> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    // Walk from the highest score down, recording the attempted counts at each
    // distinct score; reversed afterwards.
    struct Step {
        double threshold;
        std::size_t correct, attempted;
    };
    std::vector<Step> steps;
    steps.push_back({kAbstainAllThreshold, 0, 0});
    std::size_t correct = 0, attempted = 0, i = 0;
    while (i < sorted.size()) {
        const double s = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == s; ++i) {
            ++attempted;
            correct += static_cast<std::size_t>(sorted[i].label);
        }
        steps.push_back({s, correct, attempted});
    }
    if (steps.back().threshold > 0.0) steps.push_back({0.0, correct, attempted});
    std::reverse(steps.begin(), steps.end());

    const double n = static_cast<double>(pairs.size());
    const std::size_t correct0 = steps.front().correct;
    TradeoffCurve curve;
    curve.n = pairs.size();
    curve.points.reserve(steps.size());
    for (const auto& st : steps) {
        TradeoffPoint p;
        p.threshold = st.threshold;
        p.attempted_n = st.attempted;
        p.correct_n = st.correct;
        p.utility = static_cast<double>(st.correct) / n;
        p.total_error = static_cast<double>(st.attempted - st.correct) / n;
        p.coverage = p.utility + p.total_error;
        if (st.attempted > 0)
            p.attempted_error = static_cast<double>(st.attempted - st.correct) / static_cast<double>(st.attempted);
        if (correct0 > 0)
            p.discard_fraction = static_cast<double>(correct0 - st.correct) / static_cast<double>(correct0);
        curve.points.push_back(p);
    }
    return curve;
}

OperatingPoint utility_tax(const TradeoffCurve& curve, double target_error) {
    if (!(target_error >= 0.0 && target_error <= 1.0)) throw Error("utility_tax: target error must lie in [0,1]");
    if (curve.points.empty()) throw EmptyInput("utility_tax: empty curve");
    if (!(curve.points.front().utility > 0.0))
        throw Error("utility_tax: no correct answers without abstention, discard fraction undefined");

    for (const auto& p : curve.points) {
        if (p.total_error > target_error) continue;
        OperatingPoint op;
        op.target_error = target_error;
        op.threshold = p.threshold;
        op.utility = p.utility;
        op.total_error = p.total_error;
        op.coverage = p.coverage;
        op.discard_fraction = p.discard_fraction.value_or(0.0);
        op.feasible = p.coverage > 0.0;
        return op;
    }
    // The last point abstains on everything and has zero error, so this is
    // reached only for a malformed curve.
    throw Error("utility_tax: curve has no point within the target");
}

}  // namespace llmrel
