#include "llmrel/frontier.hpp"

namespace llmrel {

ScatterTable scatter_data(const std::vector<ScoreboardRow>& rows) {
    if (rows.empty()) throw EmptyInput("scatter_data");
    ScatterTable t;
    t.points.reserve(rows.size());
    for (const auto& r : rows)
        t.points.push_back({r.model_name, r.stats.attempted_accuracy, r.stats.accuracy, r.stats.refusal_rate});
    return t;
}

namespace {

OperatingPoint operating_point_or_infeasible(const TradeoffCurve& curve, double target) {
    if (!curve.points.empty() && curve.points.front().utility > 0.0) return utility_tax(curve, target);
    OperatingPoint op;
    op.target_error = target;
    op.threshold = curve.points.empty() ? kAbstainAllThreshold : curve.points.back().threshold;
    op.discard_fraction = 1.0;
    op.feasible = false;
    return op;
}

}  // namespace

FixedErrorComparison compare_at_fixed_error(const TradeoffCurve& a, const TradeoffCurve& b, double target_error) {
    FixedErrorComparison c;
    c.target_error = target_error;
    c.a = operating_point_or_infeasible(a, target_error);
    c.b = operating_point_or_infeasible(b, target_error);
    c.feasible_a = c.a.feasible;
    c.feasible_b = c.b.feasible;
    c.utility_a = c.feasible_a ? c.a.utility : 0.0;
    c.utility_b = c.feasible_b ? c.b.utility : 0.0;
    c.delta = c.utility_a - c.utility_b;
    return c;
}

SpilloverReport spillover_report(const std::map<std::string, std::pair<EvalSet, EvalSet>>& tasks) {
    if (tasks.empty()) throw EmptyInput("spillover_report: no tasks");
    SpilloverReport rep;
    for (const auto& [name, sets] : tasks) {
        SpilloverRow row;
        row.task = name;
        row.baseline = summarize(sets.first);
        row.intervention = summarize(sets.second);
        row.delta_accuracy = row.intervention.accuracy - row.baseline.accuracy;
        row.delta_attempted_accuracy = row.intervention.attempted_accuracy - row.baseline.attempted_accuracy;
        row.delta_refusal = row.intervention.refusal_rate - row.baseline.refusal_rate;
        rep.mean_delta_accuracy += row.delta_accuracy;
        rep.mean_delta_attempted_accuracy += row.delta_attempted_accuracy;
        rep.mean_delta_refusal += row.delta_refusal;
        rep.tasks.push_back(std::move(row));
    }
    const double k = static_cast<double>(rep.tasks.size());
    rep.mean_delta_accuracy /= k;
    rep.mean_delta_attempted_accuracy /= k;
    rep.mean_delta_refusal /= k;
    return rep;
}

}  // namespace llmrel
