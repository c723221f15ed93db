#pragma once

// Record model, JSONL ingestion and SimpleQA-style scoreboard statistics.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace llmrel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An aggregate was requested over an empty input.
class EmptyInput : public Error {
public:
    EmptyInput() : Error("empty input") {}
    explicit EmptyInput(const std::string& what) : Error("empty input: " + what) {}
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id)
        : Error("duplicate record id '" + id + "'"), id_(id) {}
    DuplicateId(const std::string& id, const std::string& detail)
        : Error("duplicate record id '" + id + "' (" + detail + ")"), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

enum class Correctness { Unknown, Correct, Incorrect };

/// One question/answer event. Multi-assertion responses are stored as several
/// records sharing a response_id.
struct AnswerRecord {
    std::string id;
    std::string response_id;
    std::string question;
    std::string response;
    std::string assertion;
    bool attempted = true;
    Correctness correct = Correctness::Unknown;
    std::optional<double> confidence;
    std::optional<std::vector<std::string>> resamples;
    std::optional<double> decisiveness;
    std::map<std::string, std::string> meta;

    bool operator==(const AnswerRecord&) const = default;
};

struct Provenance {
    std::string source_path;
    std::string model_name;
    std::map<std::string, std::string> labels;

    bool operator==(const Provenance&) const = default;
};

/// Immutable, ordered collection of records with unique ids.
class EvalSet {
public:
    EvalSet() = default;
    /// Throws DuplicateId when two records share an id.
    explicit EvalSet(std::vector<AnswerRecord> records, Provenance provenance = {});

    const std::vector<AnswerRecord>& records() const noexcept { return records_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    auto begin() const noexcept { return records_.begin(); }
    auto end() const noexcept { return records_.end(); }

    bool operator==(const EvalSet&) const = default;

private:
    std::vector<AnswerRecord> records_;
    Provenance provenance_;
};

struct Violation {
    std::size_t line = 0;  // 1-based input line, 0 when not tied to a line
    std::string record_id;
    std::string rule;
    std::string message;
};

struct IngestResult {
    EvalSet set;
    std::vector<Violation> violations;
};

/// Parses line-delimited JSON records. Malformed lines are skipped and
/// reported; a duplicate id or an unreadable stream throws.
IngestResult ingest(std::istream& in, Provenance provenance = {});
IngestResult ingest_file(const std::filesystem::path& path);

/// Inverse of ingest: one JSON object per line, keys in a fixed order.
void write_jsonl(std::ostream& out, const EvalSet& set);
std::string to_jsonl(const EvalSet& set);

/// Reports every invariant breach; empty iff the set is clean.
std::vector<Violation> validate(const EvalSet& set);

struct SummaryStats {
    std::size_t n = 0;
    std::size_t attempted_n = 0;
    std::size_t correct_n = 0;
    double accuracy = 0.0;
    double attempted_accuracy = 0.0;
    double refusal_rate = 0.0;
    double f1 = 0.0;
    bool attempted_accuracy_defined = false;
};

/// Non-attempted records count as not-correct in overall accuracy. An
/// attempted record with unknown correctness is an error.
SummaryStats summarize(std::span<const AnswerRecord> records);
SummaryStats summarize(const EvalSet& set);

/// Harmonic mean of accuracy and attempted accuracy; 0 when both are 0.
double f1(double accuracy, double attempted_accuracy);

}  // namespace llmrel
