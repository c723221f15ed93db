#pragma once

// Faithfulness of expressed uncertainty: intrinsic confidence from resampled
// assertions, decisiveness of the wording, their per-response agreement, and
// the confidence-binned average (cMFG).

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "llmrel/core.hpp"

namespace llmrel {

/// Decides whether a resampled assertion contradicts the candidate assertion.
/// Must be deterministic for fixed inputs.
class ContradictionProvider {
public:
    virtual ~ContradictionProvider() = default;
    virtual bool contradicts(std::string_view assertion, std::string_view other, std::string_view question) const = 0;
};

/// Probability a reader would assign to the assertion given only the wording
/// of the response. Results lie in [0,1].
class DecisivenessProvider {
public:
    virtual ~DecisivenessProvider() = default;
    virtual double score(std::string_view question, std::string_view response, std::string_view assertion) = 0;
};

/// Raised when a provider returns something outside its contract.
class ContractViolation : public Error {
public:
    using Error::Error;
};

struct NormalizationConfig {
    bool casefold = true;
    bool trim = true;
    bool strip_punctuation = true;
    bool collapse_whitespace = true;
};

std::string normalize_text(std::string_view text, const NormalizationConfig& cfg);

/// Two assertions agree iff either normalized text contains the other.
class ContainmentContradiction final : public ContradictionProvider {
public:
    explicit ContainmentContradiction(NormalizationConfig cfg = {}) : cfg_(cfg) {}
    bool contradicts(std::string_view assertion, std::string_view other, std::string_view question) const override;

private:
    NormalizationConfig cfg_;
};

std::unique_ptr<ContradictionProvider> containment_contradiction(NormalizationConfig cfg = {});

/// Hedge-cue table for the offline decisiveness provider.
struct Lexicon {
    std::map<std::string, double> cues;  // phrase -> decisiveness
    double no_cue = 0.95;

    static Lexicon defaults();
    /// {"cues": {phrase: value}, "default": value}. Throws on a malformed table.
    static Lexicon from_json(std::string_view text);
    static Lexicon load(const std::filesystem::path& path);
};

/// Explicit "N% sure/certain/confident" statements map to N/100. Otherwise the
/// longest cue phrase found on word boundaries wins; ties go to the lower value.
class LexiconDecisiveness final : public DecisivenessProvider {
public:
    explicit LexiconDecisiveness(Lexicon lexicon);
    double score(std::string_view question, std::string_view response, std::string_view assertion) override;

private:
    struct Cue {
        std::string phrase;
        double value;
        std::regex pattern;
    };
    std::vector<Cue> cues_;  // longest phrase first
    double no_cue_;
};

std::unique_ptr<DecisivenessProvider> lexicon_decisiveness(Lexicon lexicon = Lexicon::defaults());

/// Decisiveness looked up from pre-scored (question, response, assertion) rows.
class FixtureDecisiveness final : public DecisivenessProvider {
public:
    /// JSONL rows with `question`, `response`, `assertion`, `decisiveness`.
    static FixtureDecisiveness load(const std::filesystem::path& path);
    void add(std::string question, std::string response, std::string assertion, double decisiveness);
    double score(std::string_view question, std::string_view response, std::string_view assertion) override;

private:
    std::unordered_map<std::string, double> table_;
};

/// 1 - (number of contradicting resamples) / k. Throws when k = 0.
double intrinsic_confidence(std::string_view assertion, std::span<const std::string> resamples,
                            std::string_view question, const ContradictionProvider& provider);

enum class ConfidenceSource { Supplied, Resampled };

struct ResolvedConfidence {
    double value = 0.0;
    ConfidenceSource source = ConfidenceSource::Supplied;
};

/// Supplied confidence wins over resamples.
ResolvedConfidence resolve_confidence(const AnswerRecord& record, const ContradictionProvider& provider);

/// Supplied decisiveness wins; otherwise the provider is consulted. Throws when
/// neither is available or the provider breaks the [0,1] range.
double resolve_decisiveness(const AnswerRecord& record, DecisivenessProvider* provider);

/// 1 - mean |dec - conf| over the assertions of one response.
double faithfulness(std::span<const AnswerRecord> response_records, const ContradictionProvider& conf_provider,
                    DecisivenessProvider* dec_provider);

struct FaithfulnessEntry {
    std::string id;
    std::string response_id;
    double confidence = 0.0;
    ConfidenceSource confidence_source = ConfidenceSource::Supplied;
    double decisiveness = 0.0;
    double faithfulness = 0.0;
};

struct ResponseFaithfulness {
    std::string response_id;
    std::size_t assertions = 0;
    double faithfulness = 0.0;
};

struct FaithfulnessBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    std::optional<double> mean_faithfulness;  // unset for empty bins
};

struct FaithfulnessReport {
    std::vector<FaithfulnessEntry> per_record;
    std::vector<ResponseFaithfulness> per_response;  // ordered by first appearance
    std::vector<FaithfulnessBin> bin_table;
    std::size_t bin_count = 0;
    double cmfg = 0.0;
};

inline constexpr std::size_t kDefaultCmfgBins = 10;

/// Each assertion is binned by its confidence; cMFG is the unweighted mean of
/// the non-empty bins' mean faithfulness.
FaithfulnessReport cmfg(const EvalSet& set, std::size_t bin_count, const ContradictionProvider& conf_provider,
                        DecisivenessProvider* dec_provider);

}  // namespace llmrel
