#include "llmrel/sim.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

namespace llmrel {

void SimConfig::validate() const {
    if (n == 0) throw Error("sim: n must be at least 1");
    if (!(base_error_rate >= 0.0 && base_error_rate <= 1.0)) throw Error("sim: base_error_rate must lie in [0,1]");
    for (const auto& s : {correct_shape, incorrect_shape}) {
        if (!(s.alpha > 0.0) || !(s.beta > 0.0) || !std::isfinite(s.alpha) || !std::isfinite(s.beta))
            throw Error(fmt::format("sim: invalid Beta shape ({}, {})", s.alpha, s.beta));
    }
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

RecordStream::RecordStream(std::uint64_t seed, std::uint64_t index)
    : state_(splitmix64_mix(seed ^ splitmix64_mix(index + 1))) {}

std::uint64_t RecordStream::next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return splitmix64_mix(state_);
}

double RecordStream::uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double RecordStream::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RecordStream::gamma(double shape) {
    if (shape < 1.0) {
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double RecordStream::beta(const BetaShape& shape) {
    const double x = gamma(shape.alpha);
    const double y = gamma(shape.beta);
    return x / (x + y);
}

std::vector<ScoredLabel> generate(const SimConfig& config) {
    config.validate();
    const auto n_correct =
        static_cast<std::size_t>(std::llround(static_cast<double>(config.n) * (1.0 - config.base_error_rate)));
    std::vector<ScoredLabel> out(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        RecordStream rs(config.seed, i);
        const bool correct = i < n_correct;
        out[i] = {rs.beta(correct ? config.correct_shape : config.incorrect_shape), correct ? 1 : 0};
    }
    return out;
}

EvalSet to_eval_set(std::span<const ScoredLabel> pairs, const std::string& model_name) {
    std::vector<AnswerRecord> recs;
    recs.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        AnswerRecord r;
        r.id = fmt::format("sim-{:06d}", i);
        r.response_id = r.id;
        r.question = fmt::format("synthetic question {}", i);
        r.response = fmt::format("synthetic response {}", i);
        r.assertion = r.response;
        r.attempted = true;
        r.correct = pairs[i].label == 1 ? Correctness::Correct : Correctness::Incorrect;
        r.confidence = pairs[i].score;
        r.meta["model"] = model_name;
        recs.push_back(std::move(r));
    }
    Provenance prov;
    prov.model_name = model_name;
    prov.labels["source"] = "simulate";
    return EvalSet(std::move(recs), std::move(prov));
}

double beta_auroc(const BetaShape& correct, const BetaShape& incorrect) {
    for (const auto& s : {correct, incorrect})
        if (!(s.alpha > 0.0) || !(s.beta > 0.0)) throw Error("beta_auroc: shape parameters must be positive");

    boost::math::quadrature::tanh_sinh<double> integrator;
    auto integrand = [&](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return boost::math::ibeta_derivative(correct.alpha, correct.beta, x) *
               boost::math::ibeta(incorrect.alpha, incorrect.beta, x);
    };
    double error = 0.0;
    const double value = integrator.integrate(integrand, 0.0, 1.0, 1e-10, &error);
    if (!(error <= 1e-6)) throw Error(fmt::format("beta_auroc: quadrature error estimate {} too large", error));
    return value;
}

BetaShape family_correct_shape(double gamma) { return {1.0 + gamma, 1.0}; }
BetaShape family_incorrect_shape(double gamma) { return {1.0, 1.0 + kFamilyIncorrectSlope * gamma}; }

FamilyMember find_family_for_auroc(double target, const SimConfig& base, double tolerance) {
    if (!(target >= 0.5 && target <= 0.999)) throw Error("find_family_for_auroc: target must lie in [0.5, 0.999]");
    auto auc = [](double g) { return beta_auroc(family_correct_shape(g), family_incorrect_shape(g)); };

    auto member = [&](double g, double a) {
        FamilyMember m;
        m.gamma = g;
        m.analytic_auroc = a;
        m.config = base;
        m.config.correct_shape = family_correct_shape(g);
        m.config.incorrect_shape = family_incorrect_shape(g);
        return m;
    };

    const double a0 = auc(0.0);
    if (std::abs(a0 - target) <= tolerance) return member(0.0, a0);

    double lo = 0.0, hi = 1.0;
    while (auc(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e7) throw Error("find_family_for_auroc: target not reachable");
    }
    double g = 0.5 * (lo + hi);
    double a = auc(g);
    for (int it = 0; it < 200 && std::abs(a - target) > tolerance * 1e-3; ++it) {
        (a < target ? lo : hi) = g;
        g = 0.5 * (lo + hi);
        a = auc(g);
    }
    if (std::abs(a - target) > tolerance) throw Error("find_family_for_auroc: bisection did not converge");
    return member(g, a);
}

Fig2Report run_fig2_pipeline(const SimConfig& config, const Fig2Options& options) {
    Fig2Report rep;
    rep.config = config;
    const auto raw = generate(config);

    rep.auroc_raw = auroc(raw);
    rep.auroc_analytic = beta_auroc(config.correct_shape, config.incorrect_shape);
    const auto sm_raw = smooth_ece(raw);
    rep.smece_raw = sm_raw.value;
    rep.sigma_raw = sm_raw.sigma_star;

    const auto fit = fit_isotonic(raw);
    rep.isotonic_blocks = fit.blocks().size();
    std::vector<ScoredLabel> calibrated(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) calibrated[i] = {fit(raw[i].score), raw[i].label};

    rep.smece_calibrated_in_sample = smooth_ece(calibrated).value;

    // Folds by index parity; labels are laid out in blocks, so both folds keep
    // the stratified split.
    std::array<std::vector<ScoredLabel>, 2> folds;
    for (std::size_t i = 0; i < raw.size(); ++i) folds[i % 2].push_back(raw[i]);
    std::vector<ScoredLabel> cross;
    cross.reserve(raw.size());
    for (std::size_t f = 0; f < 2; ++f) {
        if (folds[1 - f].empty()) continue;
        const auto other = fit_isotonic(folds[1 - f]);
        for (const auto& p : folds[f]) cross.push_back({other(p.score), p.label});
    }
    if (cross.empty()) cross = calibrated;  // n = 1
    const auto sm_cal = smooth_ece(cross);
    rep.smece_calibrated = sm_cal.value;
    rep.sigma_calibrated = sm_cal.sigma_star;
    rep.reliability = reliability_bins(calibrated, options.bins);
    rep.ece_calibrated = ece(rep.reliability);

    rep.hist_correct.assign(options.bins, 0);
    rep.hist_incorrect.assign(options.bins, 0);
    for (const auto& p : calibrated) {
        auto b = static_cast<std::size_t>(std::floor(p.score * static_cast<double>(options.bins)));
        b = std::min(b, options.bins - 1);
        (p.label == 1 ? rep.hist_correct : rep.hist_incorrect)[b]++;
    }

    rep.curve = tradeoff_curve(calibrated);
    for (double t : options.targets) rep.tax_at_targets[t] = utility_tax(rep.curve, t);
    return rep;
}

}  // namespace llmrel
