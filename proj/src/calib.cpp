#include "llmrel/calib.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace llmrel {

namespace {

void check_pairs(std::span<const ScoredLabel> pairs, const char* op, bool unit_scores) {
    if (pairs.empty()) throw EmptyInput(op);
    for (const auto& p : pairs) {
        if (!std::isfinite(p.score)) throw Error(fmt::format("{}: non-finite score", op));
        if (unit_scores && (p.score < 0.0 || p.score > 1.0))
            throw Error(fmt::format("{}: score {} outside [0,1]", op, p.score));
        if (p.label != 0 && p.label != 1) throw Error(fmt::format("{}: label {} is not 0/1", op, p.label));
    }
}

// Residual mass on the quadrature grid, split linearly between neighbours.
std::vector<double> grid_residuals(std::span<const ScoredLabel> pairs, std::size_t intervals) {
    std::vector<double> mass(intervals + 1, 0.0);
    const double scale = static_cast<double>(intervals);
    for (const auto& p : pairs) {
        const double x = p.score * scale;
        auto j = static_cast<std::size_t>(std::floor(x));
        if (j >= intervals) j = intervals - 1;
        const double w = x - static_cast<double>(j);
        const double r = static_cast<double>(p.label) - p.score;
        mass[j] += (1.0 - w) * r;
        mass[j + 1] += w * r;
    }
    return mass;
}

// Periodised Gaussian D(m) = sum_k g((m + 2kM) h) for m in [0, 2M]. The
// reflected kernel on the grid is K(i, j) = D(|i - j|) + D(i + j).
std::vector<double> periodised_gaussian(std::size_t intervals, double sigma) {
    const auto two_m = static_cast<long>(2 * intervals);
    const double h = 1.0 / static_cast<double>(intervals);
    const double cutoff = 12.0 * sigma;
    const long kmax = static_cast<long>(std::ceil(6.0 * sigma)) + 1;
    std::vector<double> d(static_cast<std::size_t>(two_m) + 1, 0.0);
    for (long m = 0; m <= two_m; ++m) {
        double acc = 0.0;
        for (long k = -kmax; k <= kmax; ++k) {
            const double x = static_cast<double>(m + k * two_m) * h;
            if (std::abs(x) > cutoff) continue;
            const double z = x / sigma;
            acc += std::exp(-0.5 * z * z);
        }
        d[static_cast<std::size_t>(m)] = acc;
    }
    return d;
}

inline double trapezoid_weight(std::size_t i, std::size_t intervals) {
    return (i == 0 || i == intervals) ? 0.5 : 1.0;
}

// Trapezoid mass of column j of the unnormalised kernel.
double column_mass(const std::vector<double>& d, std::size_t j, std::size_t intervals) {
    const double h = 1.0 / static_cast<double>(intervals);
    double acc = 0.0;
    for (std::size_t i = 0; i <= intervals; ++i) {
        const std::size_t diff = i > j ? i - j : j - i;
        acc += trapezoid_weight(i, intervals) * (d[diff] + d[i + j]);
    }
    return acc * h;
}

double smooth_ece_grid(const std::vector<double>& mass, std::size_t n, double sigma, std::size_t intervals) {
    const auto d = periodised_gaussian(intervals, sigma);
    const double h = 1.0 / static_cast<double>(intervals);

    std::vector<std::size_t> nz;
    std::vector<double> weighted;
    for (std::size_t j = 0; j <= intervals; ++j) {
        if (mass[j] == 0.0) continue;
        nz.push_back(j);
        weighted.push_back(mass[j] / column_mass(d, j, intervals));
    }

    double integral = 0.0;
    for (std::size_t i = 0; i <= intervals; ++i) {
        double s = 0.0;
        for (std::size_t q = 0; q < nz.size(); ++q) {
            const std::size_t j = nz[q];
            const std::size_t diff = i > j ? i - j : j - i;
            s += weighted[q] * (d[diff] + d[i + j]);
        }
        integral += trapezoid_weight(i, intervals) * std::abs(s);
    }
    return integral * h / static_cast<double>(n);
}

void check_options(const SmoothEceOptions& opts) {
    if (opts.grid_points < 3) throw Error("smece: grid needs at least 3 points");
    if (!(opts.sigma_min > 0.0) || !(opts.sigma_max > opts.sigma_min)) throw Error("smece: invalid bandwidth range");
    if (opts.bracket_probes < 2) throw Error("smece: need at least 2 bracket probes");
}

}  // namespace

std::size_t ReliabilityBins::total() const noexcept {
    std::size_t n = 0;
    for (const auto& b : bins) n += b.count;
    return n;
}

ReliabilityBins reliability_bins(std::span<const ScoredLabel> pairs, std::size_t bin_count) {
    if (bin_count == 0) throw Error("reliability_bins: bin_count must be positive");
    check_pairs(pairs, "reliability_bins", true);

    std::vector<double> conf_sum(bin_count, 0.0), label_sum(bin_count, 0.0);
    std::vector<std::size_t> counts(bin_count, 0);
    for (const auto& p : pairs) {
        auto b = static_cast<std::size_t>(std::floor(p.score * static_cast<double>(bin_count)));
        b = std::min(b, bin_count - 1);
        conf_sum[b] += p.score;
        label_sum[b] += p.label;
        ++counts[b];
    }

    ReliabilityBins out;
    out.bins.resize(bin_count);
    for (std::size_t b = 0; b < bin_count; ++b) {
        auto& bin = out.bins[b];
        bin.lo = static_cast<double>(b) / static_cast<double>(bin_count);
        bin.hi = static_cast<double>(b + 1) / static_cast<double>(bin_count);
        bin.count = counts[b];
        if (counts[b] > 0) {
            bin.mean_confidence = conf_sum[b] / static_cast<double>(counts[b]);
            bin.mean_accuracy = label_sum[b] / static_cast<double>(counts[b]);
        }
    }
    return out;
}

double ece(const ReliabilityBins& bins) {
    const std::size_t n = bins.total();
    if (n == 0) throw EmptyInput("ece over all-empty bins");
    double acc = 0.0;
    for (const auto& b : bins.bins) {
        if (b.count == 0) continue;
        acc += static_cast<double>(b.count) * std::abs(*b.mean_accuracy - *b.mean_confidence);
    }
    return acc / static_cast<double>(n);
}

double smooth_ece_at(std::span<const ScoredLabel> pairs, double sigma, const SmoothEceOptions& opts) {
    check_pairs(pairs, "smece", true);
    check_options(opts);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("smece: bandwidth must be positive");
    const std::size_t intervals = opts.grid_points - 1;
    return smooth_ece_grid(grid_residuals(pairs, intervals), pairs.size(), sigma, intervals);
}

SmoothEce smooth_ece(std::span<const ScoredLabel> pairs, const SmoothEceOptions& opts) {
    check_pairs(pairs, "smece", true);
    check_options(opts);
    const std::size_t intervals = opts.grid_points - 1;
    const auto mass = grid_residuals(pairs, intervals);
    auto at = [&](double sigma) { return smooth_ece_grid(mass, pairs.size(), sigma, intervals); };

    // Smallest probe where smECE_s - s is no longer positive.
    const double log_lo = std::log(opts.sigma_min);
    const double log_hi = std::log(opts.sigma_max);
    double prev_sigma = 0.0;
    double prev_gap = 0.0;
    for (std::size_t p = 0; p < opts.bracket_probes; ++p) {
        const double t = static_cast<double>(p) / static_cast<double>(opts.bracket_probes - 1);
        const double sigma = p + 1 == opts.bracket_probes ? opts.sigma_max : std::exp(log_lo + t * (log_hi - log_lo));
        const double value = at(sigma);
        const double gap = value - sigma;
        if (gap <= 0.0) {
            if (p == 0) return {value, sigma};  // residual already below the smallest bandwidth
            double lo = prev_sigma, hi = sigma;
            for (std::size_t it = 0; it < opts.bisection_iterations; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (at(mid) - mid > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            const double sigma_star = 0.5 * (lo + hi);
            return {at(sigma_star), sigma_star};
        }
        prev_sigma = sigma;
        prev_gap = gap;
    }
    throw Error(fmt::format("smece: no fixed point in [{}, {}]; smECE - sigma = {} at the upper end",
                            opts.sigma_min, opts.sigma_max, prev_gap));
}

double reflected_kernel_mass(double center, double sigma, std::size_t grid_points) {
    if (grid_points < 3) throw Error("kernel mass: grid needs at least 3 points");
    const std::size_t intervals = grid_points - 1;
    const auto d = periodised_gaussian(intervals, sigma);
    const double x = center * static_cast<double>(intervals);
    auto j = static_cast<std::size_t>(std::floor(x));
    if (j >= intervals) j = intervals - 1;
    const double w = x - static_cast<double>(j);
    // Each column is normalised to unit mass, so the split kernel is too.
    const double h = 1.0 / static_cast<double>(intervals);
    double acc = 0.0;
    const double mj = column_mass(d, j, intervals), mj1 = column_mass(d, j + 1, intervals);
    for (std::size_t i = 0; i <= intervals; ++i) {
        auto kern = [&](std::size_t c) {
            const std::size_t diff = i > c ? i - c : c - i;
            return d[diff] + d[i + c];
        };
        acc += trapezoid_weight(i, intervals) * ((1.0 - w) * kern(j) / mj + w * kern(j + 1) / mj1);
    }
    return acc * h;
}

IsotonicFit::IsotonicFit(std::vector<IsotonicBlock> blocks) : blocks_(std::move(blocks)) {
    for (std::size_t i = 1; i < blocks_.size(); ++i) {
        if (blocks_[i].value < blocks_[i - 1].value) throw Error("isotonic fit values must be nondecreasing");
        if (blocks_[i].score_lo <= blocks_[i - 1].score_hi) throw Error("isotonic blocks overlap");
    }
}

double IsotonicFit::operator()(double score) const {
    if (blocks_.empty()) throw Error("apply_isotonic: empty fit");
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), score,
                               [](double s, const IsotonicBlock& b) { return s < b.score_lo; });
    if (it == blocks_.begin()) return blocks_.front().value;
    return std::prev(it)->value;
}

IsotonicFit fit_isotonic(std::span<const ScoredLabel> pairs) {
    check_pairs(pairs, "fit_isotonic", false);

    std::vector<ScoredLabel> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
        return a.score < b.score || (a.score == b.score && a.label < b.label);
    });

    // Label sums are integers, so mean comparisons by cross-multiplication are exact.
    struct Pool {
        double lo, hi, sum;
        std::size_t count;
    };
    std::vector<Pool> stack;
    std::size_t i = 0;
    while (i < sorted.size()) {
        Pool cur{sorted[i].score, sorted[i].score, 0.0, 0};
        while (i < sorted.size() && sorted[i].score == cur.lo) {
            cur.sum += sorted[i].label;
            ++cur.count;
            ++i;
        }
        while (!stack.empty() &&
               stack.back().sum * static_cast<double>(cur.count) >= cur.sum * static_cast<double>(stack.back().count)) {
            const Pool& prev = stack.back();
            cur = Pool{prev.lo, cur.hi, prev.sum + cur.sum, prev.count + cur.count};
            stack.pop_back();
        }
        stack.push_back(cur);
    }

    std::vector<IsotonicBlock> blocks;
    blocks.reserve(stack.size());
    for (const auto& p : stack)
        blocks.push_back({p.lo, p.hi, p.sum / static_cast<double>(p.count), p.count});
    return IsotonicFit(std::move(blocks));
}

std::vector<double> apply_isotonic(const IsotonicFit& fit, std::span<const double> scores) {
    if (fit.empty()) throw Error("apply_isotonic: empty fit");
    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(fit(s));
    return out;
}

CalibrationReport calibration_report(std::span<const ScoredLabel> pairs, std::size_t bin_count) {
    CalibrationReport r;
    r.bins = reliability_bins(pairs, bin_count);
    r.ece = ece(r.bins);
    const auto s = smooth_ece(pairs);
    r.smece = s.value;
    r.sigma_star = s.sigma_star;
    return r;
}

std::vector<ScoredLabel> scored_labels(const EvalSet& set) {
    std::vector<ScoredLabel> out;
    for (const auto& r : set) {
        if (!r.confidence || r.correct == Correctness::Unknown) continue;
        out.push_back({*r.confidence, r.correct == Correctness::Correct ? 1 : 0});
    }
    return out;
}

}  // namespace llmrel
