#include "llmrel/faithful.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace llmrel {

using json = nlohmann::json;

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::string fixture_key(std::string_view q, std::string_view r, std::string_view a) {
    std::string key;
    key.reserve(q.size() + r.size() + a.size() + 2);
    key.append(q).push_back('\x1f');
    key.append(r).push_back('\x1f');
    key.append(a);
    return key;
}

// Lowercases ASCII and folds typographic apostrophes.
std::string fold_for_cues(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        // U+2019 RIGHT SINGLE QUOTATION MARK
        if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
            static_cast<unsigned char>(text[i + 1]) == 0x80 && static_cast<unsigned char>(text[i + 2]) == 0x99) {
            out.push_back('\'');
            i += 2;
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    }
    return out;
}

std::string regex_escape(std::string_view s) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string normalize_text(std::string_view text, const NormalizationConfig& cfg) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (cfg.strip_punctuation && c < 0x80 && std::ispunct(c)) continue;
        if (cfg.casefold && c < 0x80) c = static_cast<unsigned char>(std::tolower(c));
        if (cfg.collapse_whitespace && std::isspace(c)) {
            if (!out.empty() && out.back() == ' ') continue;
            out.push_back(' ');
            continue;
        }
        out.push_back(static_cast<char>(c));
    }
    if (cfg.trim) {
        const auto first = out.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return {};
        const auto last = out.find_last_not_of(" \t\r\n");
        out = out.substr(first, last - first + 1);
    }
    return out;
}

bool ContainmentContradiction::contradicts(std::string_view assertion, std::string_view other,
                                           std::string_view /*question*/) const {
    const auto a = normalize_text(assertion, cfg_);
    const auto b = normalize_text(other, cfg_);
    return a.find(b) == std::string::npos && b.find(a) == std::string::npos;
}

std::unique_ptr<ContradictionProvider> containment_contradiction(NormalizationConfig cfg) {
    return std::make_unique<ContainmentContradiction>(cfg);
}

Lexicon Lexicon::defaults() {
    Lexicon lx;
    lx.cues = {
        {"certain", 0.97},       {"certainly", 0.97},  {"definitely", 0.97},      {"probably", 0.7},
        {"likely", 0.7},         {"might", 0.5},       {"may", 0.5},              {"possibly", 0.5},
        {"i'm not sure", 0.2},   {"i am not sure", 0.2}, {"i don't recall", 0.2}, {"i do not recall", 0.2},
    };
    lx.no_cue = 0.95;
    return lx;
}

Lexicon Lexicon::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("lexicon: ") + e.what());
    }
    if (!j.is_object() || !j.contains("cues") || !j["cues"].is_object())
        throw Error("lexicon: expected an object with a 'cues' map");
    for (const auto& [key, v] : j.items())
        if (key != "cues" && key != "default") throw Error("lexicon: unknown key '" + key + "'");
    Lexicon lx;
    for (const auto& [phrase, v] : j["cues"].items()) {
        if (phrase.empty()) throw Error("lexicon: empty cue phrase");
        if (!v.is_number() || !in_unit(v.get<double>()))
            throw Error("lexicon: value for '" + phrase + "' must be a number in [0,1]");
        lx.cues[fold_for_cues(phrase)] = v.get<double>();
    }
    if (j.contains("default")) {
        if (!j["default"].is_number() || !in_unit(j["default"].get<double>()))
            throw Error("lexicon: 'default' must be a number in [0,1]");
        lx.no_cue = j["default"].get<double>();
    }
    return lx;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open lexicon '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

LexiconDecisiveness::LexiconDecisiveness(Lexicon lexicon) : no_cue_(lexicon.no_cue) {
    if (!in_unit(no_cue_)) throw Error("lexicon: default must lie in [0,1]");
    for (const auto& [phrase, value] : lexicon.cues) {
        if (phrase.empty()) throw Error("lexicon: empty cue phrase");
        if (!in_unit(value)) throw Error("lexicon: value for '" + phrase + "' outside [0,1]");
        cues_.push_back({phrase, value, std::regex("(^|[^a-z0-9'])" + regex_escape(phrase) + "($|[^a-z0-9'])")});
    }
    std::stable_sort(cues_.begin(), cues_.end(), [](const Cue& a, const Cue& b) {
        if (a.phrase.size() != b.phrase.size()) return a.phrase.size() > b.phrase.size();
        return a.value < b.value;
    });
}

double LexiconDecisiveness::score(std::string_view /*question*/, std::string_view response,
                                  std::string_view /*assertion*/) {
    const std::string text = fold_for_cues(response);

    static const std::regex percent(R"((\d{1,3}(?:\.\d+)?)\s*%\s*(?:sure|certain|confident))");
    std::smatch m;
    if (std::regex_search(text, m, percent)) {
        const double pct = std::stod(m[1].str());
        if (pct <= 100.0) return pct / 100.0;
    }
    for (const auto& cue : cues_) {
        if (std::regex_search(text, cue.pattern)) return cue.value;
    }
    return no_cue_;
}

std::unique_ptr<DecisivenessProvider> lexicon_decisiveness(Lexicon lexicon) {
    return std::make_unique<LexiconDecisiveness>(std::move(lexicon));
}

FixtureDecisiveness FixtureDecisiveness::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open decisiveness fixture '" + path.string() + "'");
    FixtureDecisiveness fx;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            fx.add(j.at("question").get<std::string>(), j.at("response").get<std::string>(),
                   j.value("assertion", j.at("response").get<std::string>()), j.at("decisiveness").get<double>());
        } catch (const json::exception& e) {
            throw Error(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
    return fx;
}

void FixtureDecisiveness::add(std::string question, std::string response, std::string assertion, double decisiveness) {
    if (!in_unit(decisiveness)) throw ContractViolation("fixture decisiveness outside [0,1]");
    table_[fixture_key(question, response, assertion)] = decisiveness;
}

double FixtureDecisiveness::score(std::string_view question, std::string_view response, std::string_view assertion) {
    auto it = table_.find(fixture_key(question, response, assertion));
    if (it == table_.end()) throw Error("decisiveness fixture has no entry for this (question, response, assertion)");
    return it->second;
}

double intrinsic_confidence(std::string_view assertion, std::span<const std::string> resamples,
                            std::string_view question, const ContradictionProvider& provider) {
    if (resamples.empty()) throw Error("intrinsic confidence undefined without resamples");
    std::size_t contradictions = 0;
    for (const auto& r : resamples)
        if (provider.contradicts(assertion, r, question)) ++contradictions;
    return 1.0 - static_cast<double>(contradictions) / static_cast<double>(resamples.size());
}

ResolvedConfidence resolve_confidence(const AnswerRecord& record, const ContradictionProvider& provider) {
    if (record.confidence) {
        if (!in_unit(*record.confidence)) throw Error("record '" + record.id + "': confidence outside [0,1]");
        return {*record.confidence, ConfidenceSource::Supplied};
    }
    if (record.resamples && !record.resamples->empty())
        return {intrinsic_confidence(record.assertion, *record.resamples, record.question, provider),
                ConfidenceSource::Resampled};
    throw Error("record '" + record.id + "': no confidence and no resamples");
}

double resolve_decisiveness(const AnswerRecord& record, DecisivenessProvider* provider) {
    if (record.decisiveness) {
        if (!in_unit(*record.decisiveness)) throw Error("record '" + record.id + "': decisiveness outside [0,1]");
        return *record.decisiveness;
    }
    if (!provider) throw Error("record '" + record.id + "': no decisiveness and no provider");
    double d = 0.0;
    try {
        d = provider->score(record.question, record.response, record.assertion);
    } catch (const Error& e) {
        throw Error("record '" + record.id + "': " + e.what());
    }
    if (!in_unit(d))
        throw ContractViolation(fmt::format("record '{}': provider returned decisiveness {} outside [0,1]", record.id, d));
    return d;
}

double faithfulness(std::span<const AnswerRecord> response_records, const ContradictionProvider& conf_provider,
                    DecisivenessProvider* dec_provider) {
    if (response_records.empty()) throw EmptyInput("faithfulness: empty response group");
    const auto& rid = response_records.front().response_id;
    double gap = 0.0;
    for (const auto& r : response_records) {
        if (r.response_id != rid) throw Error("faithfulness: records span several responses");
        const double conf = resolve_confidence(r, conf_provider).value;
        const double dec = resolve_decisiveness(r, dec_provider);
        gap += std::abs(dec - conf);
    }
    return 1.0 - gap / static_cast<double>(response_records.size());
}

FaithfulnessReport cmfg(const EvalSet& set, std::size_t bin_count, const ContradictionProvider& conf_provider,
                        DecisivenessProvider* dec_provider) {
    if (bin_count == 0) throw Error("cmfg: bin_count must be positive");
    if (set.empty()) throw EmptyInput("cmfg: no records");

    FaithfulnessReport rep;
    rep.bin_count = bin_count;

    std::vector<double> sums(bin_count, 0.0);
    std::vector<std::size_t> counts(bin_count, 0);
    std::vector<std::string> response_order;
    std::unordered_map<std::string, std::pair<double, std::size_t>> per_response;

    for (const auto& r : set) {
        FaithfulnessEntry e;
        e.id = r.id;
        e.response_id = r.response_id;
        const auto conf = resolve_confidence(r, conf_provider);
        e.confidence = conf.value;
        e.confidence_source = conf.source;
        e.decisiveness = resolve_decisiveness(r, dec_provider);
        e.faithfulness = 1.0 - std::abs(e.decisiveness - e.confidence);

        auto b = static_cast<std::size_t>(std::floor(e.confidence * static_cast<double>(bin_count)));
        b = std::min(b, bin_count - 1);
        sums[b] += e.faithfulness;
        ++counts[b];

        auto [it, inserted] = per_response.try_emplace(r.response_id, 0.0, 0);
        if (inserted) response_order.push_back(r.response_id);
        it->second.first += std::abs(e.decisiveness - e.confidence);
        ++it->second.second;

        rep.per_record.push_back(std::move(e));
    }

    for (const auto& rid : response_order) {
        const auto& [gap, k] = per_response.at(rid);
        rep.per_response.push_back({rid, k, 1.0 - gap / static_cast<double>(k)});
    }

    double total = 0.0;
    std::size_t nonempty = 0;
    for (std::size_t b = 0; b < bin_count; ++b) {
        FaithfulnessBin bin;
        bin.lo = static_cast<double>(b) / static_cast<double>(bin_count);
        bin.hi = static_cast<double>(b + 1) / static_cast<double>(bin_count);
        bin.count = counts[b];
        if (counts[b] > 0) {
            bin.mean_faithfulness = sums[b] / static_cast<double>(counts[b]);
            total += *bin.mean_faithfulness;
            ++nonempty;
        }
        rep.bin_table.push_back(bin);
    }
    rep.cmfg = total / static_cast<double>(nonempty);
    return rep;
}

}  // namespace llmrel
