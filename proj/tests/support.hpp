#pragma once

// Generators and independent reference implementations shared by the unit,
// property and acceptance tests. Nothing here calls into the library's metric
// code; the oracles are deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "llmrel/calib.hpp"
#include "llmrel/core.hpp"

namespace testsupport {

using llmrel::AnswerRecord;
using llmrel::Correctness;
using llmrel::ScoredLabel;

inline AnswerRecord record(std::string id, bool attempted, Correctness correct,
                           std::optional<double> confidence = std::nullopt) {
    AnswerRecord r;
    r.id = id;
    r.response_id = id;
    r.question = "q " + id;
    r.response = "r " + id;
    r.assertion = r.response;
    r.attempted = attempted;
    r.correct = correct;
    r.confidence = confidence;
    return r;
}

inline Correctness as_correctness(bool c) { return c ? Correctness::Correct : Correctness::Incorrect; }

// Scores drawn from a small lattice when `coarse` so that ties are common.
inline std::vector<ScoredLabel> random_pairs(std::mt19937_64& rng, std::size_t n, bool coarse,
                                             bool require_both_classes = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> lattice(0, 10);
    const double p = u(rng);
    std::vector<ScoredLabel> out(n);
    for (auto& sl : out) {
        sl.score = coarse ? lattice(rng) / 10.0 : u(rng);
        sl.label = u(rng) < p * 0.6 + sl.score * 0.4 ? 1 : 0;
    }
    if (require_both_classes && n >= 2) {
        out[0].label = 1;
        out[1].label = 0;
    }
    return out;
}

inline std::vector<AnswerRecord> random_records(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double p_attempt = u(rng);
    const double p_correct = u(rng);
    std::vector<AnswerRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool attempted = u(rng) < p_attempt;
        const bool correct = attempted && u(rng) < p_correct;
        out.push_back(record("r" + std::to_string(i), attempted, as_correctness(correct), u(rng)));
    }
    return out;
}

// --- AUROC: count every (correct, incorrect) pair --------------------------

inline double brute_auroc(const std::vector<ScoredLabel>& pairs) {
    std::uint64_t twice_wins = 0, pos = 0, neg = 0;
    for (const auto& a : pairs) {
        if (a.label != 1) continue;
        ++pos;
        for (const auto& b : pairs) {
            if (b.label != 0) continue;
            if (a.score > b.score) twice_wins += 2;
            else if (a.score == b.score) twice_wins += 1;
        }
    }
    for (const auto& b : pairs) neg += b.label == 0;
    return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

// --- Isotonic regression: exhaustive search over block partitions ----------
//
// Points are grouped by distinct score (tied scores must share a value), then
// every way of cutting the ordered groups into contiguous blocks is tried.
// Each block takes the mean label; partitions whose block means decrease are
// rejected. The lowest squared error wins. Returns fitted values in input
// order.
inline std::vector<double> brute_isotonic(const std::vector<ScoredLabel>& pairs) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pairs[a].score < pairs[b].score; });

    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || pairs[order[k]].score != pairs[order[k - 1]].score) groups.emplace_back();
        groups.back().push_back(order[k]);
    }
    const std::size_t m = groups.size();
    double best_sse = std::numeric_limits<double>::infinity();
    std::vector<double> best(pairs.size());
    for (std::uint32_t cuts = 0; cuts < (1u << (m - 1)); ++cuts) {
        std::vector<double> fitted(pairs.size());
        double sse = 0.0, prev_mean = -1.0;
        bool monotone = true;
        std::size_t start = 0;
        for (std::size_t g = 0; g < m && monotone; ++g) {
            const bool end_here = g == m - 1 || (cuts >> g & 1u);
            if (!end_here) continue;
            double sum = 0.0, cnt = 0.0;
            for (std::size_t h = start; h <= g; ++h)
                for (auto i : groups[h]) sum += pairs[i].label, cnt += 1.0;
            const double mean = sum / cnt;
            if (mean < prev_mean) monotone = false;
            prev_mean = mean;
            for (std::size_t h = start; h <= g; ++h)
                for (auto i : groups[h]) {
                    fitted[i] = mean;
                    sse += (pairs[i].label - mean) * (pairs[i].label - mean);
                }
            start = g + 1;
        }
        if (monotone && sse < best_sse - 1e-15) {
            best_sse = sse;
            best = fitted;
        }
    }
    return best;
}

// --- Smoothed calibration error by direct integration ----------------------
//
// Reflected Gaussian density on [0,1] centred at c: the sum over images
// c + 2k and -c + 2k. The residual curve is evaluated at the exact scores
// (no grid snapping) and integrated with composite Simpson on `intervals`
// subintervals.
inline double reflected_gaussian(double t, double c, double sigma) {
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
    double v = 0.0;
    for (int k = -3; k <= 3; ++k) {
        const double d1 = t - (c + 2.0 * k);
        const double d2 = t - (-c + 2.0 * k);
        v += std::exp(-0.5 * d1 * d1 / (sigma * sigma)) + std::exp(-0.5 * d2 * d2 / (sigma * sigma));
    }
    return v * norm;
}

inline double integrated_smece(const std::vector<ScoredLabel>& pairs, double sigma, int intervals = 20000) {
    const double h = 1.0 / intervals;
    double acc = 0.0;
    for (int j = 0; j <= intervals; ++j) {
        const double t = j * h;
        double r = 0.0;
        for (const auto& p : pairs) r += (p.label - p.score) * reflected_gaussian(t, p.score, sigma);
        const double w = (j == 0 || j == intervals) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        acc += w * std::abs(r);
    }
    return acc * h / 3.0 / static_cast<double>(pairs.size());
}

inline std::vector<ScoredLabel> constant_score(double score, std::size_t n, std::size_t positives) {
    std::vector<ScoredLabel> out(n, ScoredLabel{score, 0});
    for (std::size_t i = 0; i < positives; ++i) out[i].label = 1;
    return out;
}

// --- Analytic AUROC of two Beta laws ---------------------------------------
//
// For X ~ Beta(a, 1) and Y ~ Beta(1, b):
//   P(X > Y) = 1 - P(X <= Y) = 1 - ∫ F_X(y) f_Y(y) dy = 1 - ∫ y^a b (1-y)^(b-1) dy
//            = 1 - b B(a + 1, b).
inline double beta_family_auroc_closed_form(double a, double b) { return 1.0 - b * std::beta(a + 1.0, b); }

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("llmrel_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
