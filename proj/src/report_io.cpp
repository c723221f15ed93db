#include "llmrel/report_io.hpp"

#include <cstdlib>
#include <sstream>

#include <fmt/format.h>

namespace llmrel::io {

using json = nlohmann::json;

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string opt_csv(const std::optional<double>& v) { return v ? num(*v) : std::string{}; }

// CSV field quoting for free-text names.
std::string field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

const char* source_name(ConfidenceSource s) { return s == ConfidenceSource::Supplied ? "supplied" : "resampled"; }

}  // namespace

std::string num(double v) { return fmt::format("{}", v); }

ordered_json to_json(const SummaryStats& s) {
    ordered_json j;
    j["n"] = s.n;
    j["attempted_n"] = s.attempted_n;
    j["correct_n"] = s.correct_n;
    j["accuracy"] = s.accuracy;
    j["attempted_accuracy"] = s.attempted_accuracy;
    j["attempted_accuracy_defined"] = s.attempted_accuracy_defined;
    j["refusal_rate"] = s.refusal_rate;
    j["f1"] = s.f1;
    return j;
}

ordered_json to_json(const ReliabilityBins& bins) {
    ordered_json arr = ordered_json::array();
    for (const auto& b : bins.bins) {
        ordered_json e;
        e["lo"] = b.lo;
        e["hi"] = b.hi;
        e["count"] = b.count;
        e["mean_conf"] = opt(b.mean_confidence);
        e["mean_acc"] = opt(b.mean_accuracy);
        arr.push_back(std::move(e));
    }
    return arr;
}

ordered_json to_json(const CalibrationReport& r) {
    ordered_json j;
    j["ece"] = r.ece;
    j["smece"] = r.smece;
    j["sigma_star"] = r.sigma_star;
    j["bins"] = to_json(r.bins);
    return j;
}

ordered_json to_json(const OperatingPoint& op) {
    ordered_json j;
    j["target_error"] = op.target_error;
    j["threshold"] = op.threshold;
    j["utility"] = op.utility;
    j["total_error"] = op.total_error;
    j["coverage"] = op.coverage;
    j["discard_fraction"] = op.discard_fraction;
    j["feasible"] = op.feasible;
    return j;
}

ordered_json to_json(const FaithfulnessReport& r) {
    ordered_json j;
    ordered_json recs = ordered_json::array();
    for (const auto& e : r.per_record) {
        ordered_json x;
        x["id"] = e.id;
        x["response_id"] = e.response_id;
        x["confidence"] = e.confidence;
        x["confidence_source"] = source_name(e.confidence_source);
        x["decisiveness"] = e.decisiveness;
        x["faithfulness"] = e.faithfulness;
        recs.push_back(std::move(x));
    }
    j["per_record"] = std::move(recs);
    ordered_json resp = ordered_json::array();
    for (const auto& e : r.per_response) {
        ordered_json x;
        x["response_id"] = e.response_id;
        x["assertions"] = e.assertions;
        x["faithfulness"] = e.faithfulness;
        resp.push_back(std::move(x));
    }
    j["per_response"] = std::move(resp);
    j["cmfg"] = r.cmfg;
    ordered_json bins = ordered_json::array();
    for (const auto& b : r.bin_table) {
        ordered_json x;
        x["lo"] = b.lo;
        x["hi"] = b.hi;
        x["count"] = b.count;
        x["mean_faithfulness"] = opt(b.mean_faithfulness);
        bins.push_back(std::move(x));
    }
    j["bin_table"] = std::move(bins);
    j["bin_count"] = r.bin_count;
    return j;
}

ordered_json to_json(const SimConfig& c) {
    ordered_json j;
    j["n"] = c.n;
    j["base_error_rate"] = c.base_error_rate;
    j["correct_shape"] = {c.correct_shape.alpha, c.correct_shape.beta};
    j["incorrect_shape"] = {c.incorrect_shape.alpha, c.incorrect_shape.beta};
    j["seed"] = c.seed;
    return j;
}

SimConfig sim_config_from_json(const json& j, SimConfig base) {
    if (!j.is_object()) throw Error("sim config must be a JSON object");
    auto shape = [](const json& v, const char* name) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw Error(std::string("sim config: '") + name + "' must be [alpha, beta]");
        return BetaShape{v[0].get<double>(), v[1].get<double>()};
    };
    try {
        if (j.contains("n")) base.n = j.at("n").get<std::size_t>();
        if (j.contains("base_error_rate")) base.base_error_rate = j.at("base_error_rate").get<double>();
        if (j.contains("correct_shape")) base.correct_shape = shape(j.at("correct_shape"), "correct_shape");
        if (j.contains("incorrect_shape")) base.incorrect_shape = shape(j.at("incorrect_shape"), "incorrect_shape");
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw Error(std::string("sim config: ") + e.what());
    }
    base.validate();
    return base;
}

ordered_json to_json(const Fig2Report& r) {
    ordered_json j;
    j["config"] = to_json(r.config);
    j["auroc_raw"] = r.auroc_raw;
    j["auroc_analytic"] = r.auroc_analytic;
    j["smece_raw"] = r.smece_raw;
    j["sigma_raw"] = r.sigma_raw;
    j["smece_calibrated"] = r.smece_calibrated;
    j["sigma_calibrated"] = r.sigma_calibrated;
    j["smece_calibrated_in_sample"] = r.smece_calibrated_in_sample;
    j["ece_calibrated"] = r.ece_calibrated;
    j["isotonic_blocks"] = r.isotonic_blocks;
    if (!r.curve.points.empty()) {
        const auto& p0 = r.curve.points.front();
        j["no_abstention"] = {{"utility", p0.utility}, {"total_error", p0.total_error}};
    }
    j["curve_points"] = r.curve.points.size();
    ordered_json taxes = ordered_json::array();
    for (const auto& [t, op] : r.tax_at_targets) taxes.push_back(to_json(op));
    j["tax_at_targets"] = std::move(taxes);
    ordered_json bins = to_json(r.reliability);
    for (std::size_t i = 0; i < bins.size() && i < r.hist_correct.size(); ++i) {
        bins[i]["n_correct"] = r.hist_correct[i];
        bins[i]["n_incorrect"] = r.hist_incorrect[i];
    }
    j["reliability"] = std::move(bins);
    return j;
}

ordered_json to_json(const FixedErrorComparison& c) {
    ordered_json j;
    j["target_error"] = c.target_error;
    j["utility_a"] = c.utility_a;
    j["utility_b"] = c.utility_b;
    j["delta"] = c.delta;
    j["feasible_a"] = c.feasible_a;
    j["feasible_b"] = c.feasible_b;
    j["a"] = to_json(c.a);
    j["b"] = to_json(c.b);
    return j;
}

ordered_json to_json(const SpilloverReport& r) {
    ordered_json j;
    ordered_json tasks = ordered_json::array();
    for (const auto& t : r.tasks) {
        ordered_json x;
        x["task"] = t.task;
        x["baseline"] = to_json(t.baseline);
        x["intervention"] = to_json(t.intervention);
        x["delta_accuracy"] = t.delta_accuracy;
        x["delta_attempted_accuracy"] = t.delta_attempted_accuracy;
        x["delta_refusal"] = t.delta_refusal;
        tasks.push_back(std::move(x));
    }
    j["tasks"] = std::move(tasks);
    j["aggregate"] = {{"delta_accuracy", r.mean_delta_accuracy},
                      {"delta_attempted_accuracy", r.mean_delta_attempted_accuracy},
                      {"delta_refusal", r.mean_delta_refusal}};
    return j;
}

ordered_json to_json(const std::vector<Violation>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& x : v) {
        ordered_json e;
        e["line"] = x.line;
        e["id"] = x.record_id;
        e["rule"] = x.rule;
        e["message"] = x.message;
        arr.push_back(std::move(e));
    }
    return arr;
}

ordered_json to_json(const std::vector<CacheEntry>& entries, const JudgeStats& stats) {
    ordered_json j;
    j["lookups"] = stats.lookups;
    j["cache_hits"] = stats.cache_hits;
    j["http_calls"] = stats.http_calls;
    j["retries"] = stats.retries;
    ordered_json arr = ordered_json::array();
    for (const auto& e : entries) arr.push_back({{"digest", e.digest}, {"decisiveness", e.decisiveness}});
    j["entries"] = std::move(arr);
    return j;
}

std::string reliability_csv(const ReliabilityBins& bins) {
    std::string out = "bin_lo,bin_hi,count,mean_conf,mean_acc\n";
    for (const auto& b : bins.bins)
        out += fmt::format("{},{},{},{},{}\n", num(b.lo), num(b.hi), b.count, opt_csv(b.mean_confidence),
                           opt_csv(b.mean_accuracy));
    return out;
}

std::string curve_csv(const TradeoffCurve& curve) {
    std::string out = "threshold,coverage,utility,total_error,attempted_error,discard_fraction\n";
    for (const auto& p : curve.points)
        out += fmt::format("{},{},{},{},{},{}\n", num(p.threshold), num(p.coverage), num(p.utility), num(p.total_error),
                           opt_csv(p.attempted_error), opt_csv(p.discard_fraction));
    return out;
}

TradeoffCurve parse_curve_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw EmptyInput("curve csv");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "threshold,coverage,utility,total_error,attempted_error,discard_fraction")
        throw Error("curve csv: unexpected header '" + line + "'");

    auto parse = [](const std::string& s, std::size_t lineno) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) throw Error(fmt::format("curve csv line {}: bad number '{}'", lineno, s));
        return v;
    };

    TradeoffCurve curve;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 6) throw Error(fmt::format("curve csv line {}: expected 6 fields", lineno));
        TradeoffPoint p;
        p.threshold = parse(cells[0], lineno);
        p.coverage = parse(cells[1], lineno);
        p.utility = parse(cells[2], lineno);
        p.total_error = parse(cells[3], lineno);
        if (!cells[4].empty()) p.attempted_error = parse(cells[4], lineno);
        if (!cells[5].empty()) p.discard_fraction = parse(cells[5], lineno);
        curve.points.push_back(p);
    }
    if (curve.points.empty()) throw EmptyInput("curve csv has no points");
    return curve;
}

std::string tax_csv(const std::vector<OperatingPoint>& points) {
    std::string out = "target_error,threshold,utility,total_error,coverage,discard_fraction,feasible\n";
    for (const auto& p : points)
        out += fmt::format("{},{},{},{},{},{},{}\n", num(p.target_error), num(p.threshold), num(p.utility),
                           num(p.total_error), num(p.coverage), num(p.discard_fraction), p.feasible ? "true" : "false");
    return out;
}

std::string faithfulness_bins_csv(const FaithfulnessReport& r) {
    std::string out = "bin_lo,bin_hi,count,mean_faithfulness\n";
    for (const auto& b : r.bin_table)
        out += fmt::format("{},{},{},{}\n", num(b.lo), num(b.hi), b.count, opt_csv(b.mean_faithfulness));
    return out;
}

std::string scatter_csv(const ScatterTable& t) {
    std::string out = "model,attempted_accuracy,accuracy,refusal_rate\n";
    for (const auto& p : t.points)
        out += fmt::format("{},{},{},{}\n", field(p.model), num(p.attempted_accuracy), num(p.accuracy),
                           num(p.refusal_rate));
    return out;
}

std::string spillover_csv(const SpilloverReport& r) {
    std::string out =
        "task,baseline_accuracy,intervention_accuracy,delta_accuracy,baseline_attempted_accuracy,"
        "intervention_attempted_accuracy,delta_attempted_accuracy,baseline_refusal,intervention_refusal,"
        "delta_refusal\n";
    for (const auto& t : r.tasks)
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", field(t.task), num(t.baseline.accuracy),
                           num(t.intervention.accuracy), num(t.delta_accuracy), num(t.baseline.attempted_accuracy),
                           num(t.intervention.attempted_accuracy), num(t.delta_attempted_accuracy),
                           num(t.baseline.refusal_rate), num(t.intervention.refusal_rate), num(t.delta_refusal));
    out += fmt::format("(mean),,,{},,,{},,,{}\n", num(r.mean_delta_accuracy), num(r.mean_delta_attempted_accuracy),
                       num(r.mean_delta_refusal));
    return out;
}

std::string comparison_csv(const std::vector<FixedErrorComparison>& rows) {
    std::string out = "target_error,utility_a,utility_b,delta,feasible_a,feasible_b\n";
    for (const auto& c : rows)
        out += fmt::format("{},{},{},{},{},{}\n", num(c.target_error), num(c.utility_a), num(c.utility_b), num(c.delta),
                           c.feasible_a ? "true" : "false", c.feasible_b ? "true" : "false");
    return out;
}

}  // namespace llmrel::io
