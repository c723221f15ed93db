#pragma once

// Model comparison: accuracy vs attempted-accuracy scatter, utility at a fixed
// error budget, and spillover of an intervention across tasks.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "llmrel/core.hpp"
#include "llmrel/discrim.hpp"

namespace llmrel {

struct ScoreboardRow {
    std::string model_name;
    SummaryStats stats;
};

struct ScatterPoint {
    std::string model;
    double attempted_accuracy = 0.0;  // x
    double accuracy = 0.0;            // y
    double refusal_rate = 0.0;        // colour
};

struct ScatterTable {
    std::vector<ScatterPoint> points;  // one per input row, input order
    // Reference geometry: the y = x diagonal and the ideal corner.
    std::pair<double, double> diagonal_from{0.0, 0.0};
    std::pair<double, double> diagonal_to{1.0, 1.0};
    std::pair<double, double> ideal{1.0, 1.0};
};

ScatterTable scatter_data(const std::vector<ScoreboardRow>& rows);

struct FixedErrorComparison {
    double target_error = 0.0;
    OperatingPoint a;
    OperatingPoint b;
    double utility_a = 0.0;  // 0 when infeasible
    double utility_b = 0.0;
    double delta = 0.0;      // utility_a - utility_b
    bool feasible_a = false;
    bool feasible_b = false;
};

/// Step-exact comparison at the same error budget. An infeasible curve
/// (including one with no correct answers at all) contributes utility 0.
FixedErrorComparison compare_at_fixed_error(const TradeoffCurve& a, const TradeoffCurve& b, double target_error);

struct SpilloverRow {
    std::string task;
    SummaryStats baseline;
    SummaryStats intervention;
    double delta_accuracy = 0.0;
    double delta_attempted_accuracy = 0.0;
    double delta_refusal = 0.0;
};

struct SpilloverReport {
    std::vector<SpilloverRow> tasks;  // sorted by task name
    // Unweighted means of the per-task deltas.
    double mean_delta_accuracy = 0.0;
    double mean_delta_attempted_accuracy = 0.0;
    double mean_delta_refusal = 0.0;
};

SpilloverReport spillover_report(const std::map<std::string, std::pair<EvalSet, EvalSet>>& tasks);

}  // namespace llmrel
