#pragma once

// JSON and CSV serialisation of reports. Numbers are written in shortest
// round-trip form, so identical inputs give byte-identical files.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "llmrel/calib.hpp"
#include "llmrel/core.hpp"
#include "llmrel/discrim.hpp"
#include "llmrel/faithful.hpp"
#include "llmrel/frontier.hpp"
#include "llmrel/judge.hpp"
#include "llmrel/sim.hpp"

namespace llmrel::io {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const SummaryStats& s);
ordered_json to_json(const ReliabilityBins& bins);
ordered_json to_json(const CalibrationReport& r);
ordered_json to_json(const OperatingPoint& op);
ordered_json to_json(const FaithfulnessReport& r);
ordered_json to_json(const SimConfig& c);
ordered_json to_json(const Fig2Report& r);
ordered_json to_json(const FixedErrorComparison& c);
ordered_json to_json(const SpilloverReport& r);
ordered_json to_json(const std::vector<Violation>& v);
ordered_json to_json(const std::vector<CacheEntry>& entries, const JudgeStats& stats);

/// Missing keys keep their defaults; the result is validated.
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base = {});

std::string reliability_csv(const ReliabilityBins& bins);
std::string curve_csv(const TradeoffCurve& curve);
/// Parses curve_csv output. Count fields are not stored and stay 0.
TradeoffCurve parse_curve_csv(std::string_view text);
std::string tax_csv(const std::vector<OperatingPoint>& points);
std::string faithfulness_bins_csv(const FaithfulnessReport& r);
std::string scatter_csv(const ScatterTable& t);
std::string spillover_csv(const SpilloverReport& r);
std::string comparison_csv(const std::vector<FixedErrorComparison>& rows);

/// Shortest round-trip decimal form.
std::string num(double v);

}  // namespace llmrel::io
