#include "llmrel/core.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <variant>

#include "json.hpp"

namespace llmrel {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

EvalSet::EvalSet(std::vector<AnswerRecord> records, Provenance provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
    std::unordered_set<std::string> seen;
    seen.reserve(records_.size());
    for (const auto& r : records_) {
        if (!seen.insert(r.id).second) throw DuplicateId(r.id);
    }
}

namespace {

struct LineError {
    std::string rule;
    std::string message;
};

std::string type_name(const json& v) { return v.type_name(); }

// Returns a populated record or the first schema problem found on the line.
std::variant<AnswerRecord, LineError> parse_record(const json& obj) {
    if (!obj.is_object()) return LineError{"not_object", "line is not a JSON object"};

    AnswerRecord rec;
    auto require_string = [&](const char* key, std::string& dst) -> std::optional<LineError> {
        auto it = obj.find(key);
        if (it == obj.end()) return LineError{"missing_field", std::string("missing required field '") + key + "'"};
        if (!it->is_string())
            return LineError{"type_error", std::string("field '") + key + "' must be a string, got " + type_name(*it)};
        dst = it->get<std::string>();
        return std::nullopt;
    };
    if (auto e = require_string("id", rec.id)) return *e;
    if (auto e = require_string("question", rec.question)) return *e;
    if (auto e = require_string("response", rec.response)) return *e;

    auto att = obj.find("attempted");
    if (att == obj.end()) return LineError{"missing_field", "missing required field 'attempted'"};
    if (!att->is_boolean()) return LineError{"type_error", "field 'attempted' must be a boolean, got " + type_name(*att)};
    rec.attempted = att->get<bool>();

    auto optional_string = [&](const char* key, std::string& dst, const std::string& fallback) -> std::optional<LineError> {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            dst = fallback;
            return std::nullopt;
        }
        if (!it->is_string())
            return LineError{"type_error", std::string("field '") + key + "' must be a string, got " + type_name(*it)};
        dst = it->get<std::string>();
        return std::nullopt;
    };
    if (auto e = optional_string("response_id", rec.response_id, rec.id)) return *e;
    if (auto e = optional_string("assertion", rec.assertion, rec.response)) return *e;

    if (auto it = obj.find("correct"); it != obj.end() && !it->is_null()) {
        if (!it->is_boolean())
            return LineError{"type_error", "field 'correct' must be a boolean or null, got " + type_name(*it)};
        rec.correct = it->get<bool>() ? Correctness::Correct : Correctness::Incorrect;
    }

    auto optional_number = [&](const char* key, std::optional<double>& dst) -> std::optional<LineError> {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        if (!it->is_number())
            return LineError{"type_error", std::string("field '") + key + "' must be a number, got " + type_name(*it)};
        dst = it->get<double>();
        return std::nullopt;
    };
    if (auto e = optional_number("confidence", rec.confidence)) return *e;
    if (auto e = optional_number("decisiveness", rec.decisiveness)) return *e;

    if (auto it = obj.find("resamples"); it != obj.end() && !it->is_null()) {
        if (!it->is_array())
            return LineError{"type_error", "field 'resamples' must be an array of strings, got " + type_name(*it)};
        std::vector<std::string> samples;
        for (const auto& s : *it) {
            if (!s.is_string()) return LineError{"type_error", "field 'resamples' must contain only strings"};
            samples.push_back(s.get<std::string>());
        }
        rec.resamples = std::move(samples);
    }

    if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) return LineError{"type_error", "field 'meta' must be an object, got " + type_name(*it)};
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) return LineError{"type_error", "meta value '" + k + "' must be a string"};
            rec.meta[k] = v.get<std::string>();
        }
    }

    static const std::unordered_set<std::string> known = {
        "id",         "response_id", "question",  "response",     "assertion", "attempted",
        "correct",    "confidence",  "resamples", "decisiveness", "meta"};
    for (const auto& [k, v] : obj.items()) {
        if (known.count(k)) continue;
        rec.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return rec;
}

}  // namespace

IngestResult ingest(std::istream& in, Provenance provenance) {
    if (!in) throw Error("unreadable input stream");

    std::vector<AnswerRecord> records;
    std::vector<Violation> violations;
    std::unordered_map<std::string, std::size_t> first_line;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            violations.push_back({lineno, "", "malformed_json", e.what()});
            continue;
        }
        auto parsed = parse_record(obj);
        if (auto* err = std::get_if<LineError>(&parsed)) {
            std::string id = obj.is_object() && obj.contains("id") && obj["id"].is_string()
                                 ? obj["id"].get<std::string>()
                                 : std::string{};
            violations.push_back({lineno, id, err->rule, err->message});
            continue;
        }
        auto& rec = std::get<AnswerRecord>(parsed);
        if (auto [it, inserted] = first_line.emplace(rec.id, lineno); !inserted) {
            throw DuplicateId(rec.id, "lines " + std::to_string(it->second) + " and " + std::to_string(lineno));
        }
        records.push_back(std::move(rec));
    }
    if (in.bad()) throw Error("read failure on input stream");

    return {EvalSet(std::move(records), std::move(provenance)), std::move(violations)};
}

IngestResult ingest_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    Provenance prov;
    prov.source_path = path.string();
    return ingest(in, std::move(prov));
}

void write_jsonl(std::ostream& out, const EvalSet& set) {
    for (const auto& r : set) {
        ordered_json j;
        j["id"] = r.id;
        j["response_id"] = r.response_id;
        j["question"] = r.question;
        j["response"] = r.response;
        j["assertion"] = r.assertion;
        j["attempted"] = r.attempted;
        switch (r.correct) {
            case Correctness::Correct: j["correct"] = true; break;
            case Correctness::Incorrect: j["correct"] = false; break;
            case Correctness::Unknown: j["correct"] = nullptr; break;
        }
        if (r.confidence) j["confidence"] = *r.confidence;
        if (r.resamples) j["resamples"] = *r.resamples;
        if (r.decisiveness) j["decisiveness"] = *r.decisiveness;
        if (!r.meta.empty()) j["meta"] = r.meta;
        out << j.dump() << '\n';
    }
}

std::string to_jsonl(const EvalSet& set) {
    std::ostringstream os;
    write_jsonl(os, set);
    return os.str();
}

std::vector<Violation> validate(const EvalSet& set) {
    std::vector<Violation> out;
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };

    std::unordered_set<std::string> seen;
    // response_id -> index of the first record in the group
    std::unordered_map<std::string, std::size_t> group_head;

    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& r = set.records()[i];
        if (!seen.insert(r.id).second) out.push_back({0, r.id, "duplicate_id", "id appears more than once"});
        if (r.confidence && !in_unit(*r.confidence))
            out.push_back({0, r.id, "confidence_range", "confidence " + std::to_string(*r.confidence) + " outside [0,1]"});
        if (r.decisiveness && !in_unit(*r.decisiveness))
            out.push_back(
                {0, r.id, "decisiveness_range", "decisiveness " + std::to_string(*r.decisiveness) + " outside [0,1]"});
        if (r.resamples && r.resamples->empty())
            out.push_back({0, r.id, "empty_resamples", "resamples present but empty"});
        if (r.resamples && r.assertion.empty())
            out.push_back({0, r.id, "empty_assertion", "resamples given for an empty assertion"});

        auto [it, inserted] = group_head.emplace(r.response_id, i);
        if (!inserted) {
            const auto& head = set.records()[it->second];
            if (head.question != r.question || head.response != r.response)
                out.push_back({0, r.id, "response_group_mismatch",
                               "records sharing response_id '" + r.response_id + "' disagree on question/response"});
        }
    }
    return out;
}

SummaryStats summarize(std::span<const AnswerRecord> records) {
    if (records.empty()) throw EmptyInput("summarize");
    SummaryStats s;
    s.n = records.size();
    for (const auto& r : records) {
        if (!r.attempted) continue;
        if (r.correct == Correctness::Unknown)
            throw Error("record '" + r.id + "' is attempted but has unknown correctness");
        ++s.attempted_n;
        if (r.correct == Correctness::Correct) ++s.correct_n;
    }
    const double n = static_cast<double>(s.n);
    s.accuracy = static_cast<double>(s.correct_n) / n;
    s.refusal_rate = static_cast<double>(s.n - s.attempted_n) / n;
    s.attempted_accuracy_defined = s.attempted_n > 0;
    s.attempted_accuracy =
        s.attempted_accuracy_defined ? static_cast<double>(s.correct_n) / static_cast<double>(s.attempted_n) : 0.0;
    s.f1 = f1(s.accuracy, s.attempted_accuracy);
    return s;
}

SummaryStats summarize(const EvalSet& set) { return summarize(std::span<const AnswerRecord>(set.records())); }

double f1(double accuracy, double attempted_accuracy) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(accuracy) || !in_unit(attempted_accuracy))
        throw Error("f1 arguments must lie in [0,1]");
    const double sum = accuracy + attempted_accuracy;
    if (sum == 0.0) return 0.0;
    return 2.0 * accuracy * attempted_accuracy / sum;
}

}  // namespace llmrel
