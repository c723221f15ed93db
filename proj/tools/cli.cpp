#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "llmrel/calib.hpp"
#include "llmrel/core.hpp"
#include "llmrel/discrim.hpp"
#include "llmrel/faithful.hpp"
#include "llmrel/frontier.hpp"
#include "llmrel/judge.hpp"
#include "llmrel/report_io.hpp"
#include "llmrel/sim.hpp"
#include "llmrel/svg.hpp"

namespace llmrel::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using io::ordered_json;

namespace {

struct RunConfig {
    std::string subcommand;
    std::vector<std::string> inputs;
    std::string out = ".";
    std::uint64_t seed = SimConfig{}.seed;
    std::vector<double> targets{0.05};
    std::size_t bins = 0;  // 0 = per-command default
    std::string provider;  // empty = per-command default
    std::string judge_url;
    std::size_t judge_concurrency = 4;
    std::string config_path;

    // simulate
    std::size_t n = SimConfig{}.n;
    double base_error = SimConfig{}.base_error_rate;
    std::vector<double> correct_shape{SimConfig{}.correct_shape.alpha, SimConfig{}.correct_shape.beta};
    std::vector<double> incorrect_shape{SimConfig{}.incorrect_shape.alpha, SimConfig{}.incorrect_shape.beta};
    std::optional<double> family_auroc;
    std::string sim_config_path;
    bool export_jsonl = false;

    // faithfulness
    std::string lexicon_path;
    std::string fixture_path;
    std::string contradiction = "containment";
    long judge_timeout_ms = 10000;
    std::size_t judge_retries = 4;
    long judge_backoff_ms = 200;

    // frontier
    std::vector<std::string> curves;
    std::string spillover_path;
};

// Raised for bad flags or inputs; exits with status 2.
struct UsageError : Error {
    using Error::Error;
};

void add_common(CLI::App* sub, RunConfig& cfg, const char* provider_help) {
    sub->add_option("--in", cfg.inputs, "Input file(s)");
    sub->add_option("--out", cfg.out, "Output directory (created if missing)")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--targets,--target", cfg.targets, "Total-error targets in [0,1], comma separated")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--bins", cfg.bins, "Bin count (default 15 for calibration, 10 for cMFG)");
    sub->add_option("--provider", cfg.provider, provider_help);
    sub->add_option("--judge-url", cfg.judge_url, "Judge endpoint base URL, e.g. http://127.0.0.1:8080");
    sub->add_option("--judge-concurrency", cfg.judge_concurrency, "Maximum in-flight judge requests")
        ->capture_default_str();
    sub->add_option("--config", cfg.config_path, "JSON file with option values; command-line flags take precedence");
}

// Fills options that were not given on the command line from the JSON config.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");

    for (const auto& [key, value] : j.items()) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (flag == "--config") continue;
        CLI::Option* opt = sub->get_option_no_throw(flag);
        if (!opt) throw UsageError("config file: unknown key '" + key + "'");
        if (opt->count() > 0) continue;

        auto scalar = [&key](const json& v) -> std::string {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
            if (v.is_number()) return v.dump();
            throw UsageError("config file: unsupported value for '" + key + "'");
        };
        if (value.is_array()) {
            for (const auto& v : value) opt->add_result(scalar(v));
        } else {
            opt->add_result(scalar(value));
        }
        opt->run_callback();
    }
}

void check_targets(const RunConfig& cfg) {
    if (cfg.targets.empty()) throw UsageError("at least one --targets value is required");
    for (double t : cfg.targets)
        if (!(t >= 0.0 && t <= 1.0)) throw UsageError(fmt::format("target {} outside [0,1]", t));
}

fs::path prepare_out(const RunConfig& cfg) {
    fs::path out(cfg.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw Error("cannot create output directory '" + cfg.out + "'");
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw Error("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

// Ingests one JSONL file; schema violations are fatal.
EvalSet load_set(const std::string& path) {
    auto res = ingest_file(path);
    if (!res.violations.empty()) {
        for (const auto& v : res.violations)
            fmt::print(stderr, "{}:{}: {} ({}){}\n", path, v.line, v.message, v.rule,
                       v.record_id.empty() ? "" : " id=" + v.record_id);
        throw Error(fmt::format("{}: {} malformed record(s)", path, res.violations.size()));
    }
    if (res.set.empty()) throw EmptyInput(path);
    return std::move(res.set);
}

void require_clean(const EvalSet& set, const std::string& path) {
    const auto violations = validate(set);
    if (violations.empty()) return;
    for (const auto& v : violations) fmt::print(stderr, "{}: record '{}': {} ({})\n", path, v.record_id, v.message, v.rule);
    throw Error(fmt::format("{}: {} validation failure(s)", path, violations.size()));
}

std::string single_input(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw UsageError(cfg.subcommand + " needs exactly one --in file");
    return cfg.inputs.front();
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, CLI::App* sub) {
    check_targets(cfg);
    if (!cfg.provider.empty() || !cfg.judge_url.empty() || !cfg.inputs.empty())
        throw UsageError("simulate takes no --in, --provider or --judge-url");

    SimConfig sc;
    if (!cfg.sim_config_path.empty()) {
        std::ifstream in(cfg.sim_config_path);
        if (!in) throw UsageError("cannot open sim config '" + cfg.sim_config_path + "'");
        try {
            sc = io::sim_config_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw UsageError(std::string("sim config: ") + e.what());
        }
    }
    auto given = [sub](const char* flag) { return sub->get_option(flag)->count() > 0; };
    if (given("--n") || cfg.sim_config_path.empty()) sc.n = cfg.n;
    if (given("--base-error") || cfg.sim_config_path.empty()) sc.base_error_rate = cfg.base_error;
    if (given("--seed") || cfg.sim_config_path.empty()) sc.seed = cfg.seed;
    if (given("--correct-shape") || cfg.sim_config_path.empty()) {
        if (cfg.correct_shape.size() != 2) throw UsageError("--correct-shape takes alpha,beta");
        sc.correct_shape = {cfg.correct_shape[0], cfg.correct_shape[1]};
    }
    if (given("--incorrect-shape") || cfg.sim_config_path.empty()) {
        if (cfg.incorrect_shape.size() != 2) throw UsageError("--incorrect-shape takes alpha,beta");
        sc.incorrect_shape = {cfg.incorrect_shape[0], cfg.incorrect_shape[1]};
    }
    sc.validate();

    ordered_json family = nullptr;
    if (cfg.family_auroc) {
        const auto member = find_family_for_auroc(*cfg.family_auroc, sc);
        sc = member.config;
        family = {{"target_auroc", *cfg.family_auroc},
                  {"gamma", member.gamma},
                  {"analytic_auroc", member.analytic_auroc},
                  {"incorrect_slope", kFamilyIncorrectSlope}};
    }

    Fig2Options opts;
    opts.targets = cfg.targets;
    opts.bins = cfg.bins ? cfg.bins : kDefaultEceBins;
    const auto report = run_fig2_pipeline(sc, opts);

    const auto out = prepare_out(cfg);
    auto j = io::to_json(report);
    j["family"] = family;
    write_json(out / "fig2_report.json", j);
    write_file(out / "curve.csv", io::curve_csv(report.curve));
    write_file(out / "reliability.csv", io::reliability_csv(report.reliability));
    std::vector<OperatingPoint> ops;
    for (const auto& [t, op] : report.tax_at_targets) ops.push_back(op);
    write_file(out / "tax.csv", io::tax_csv(ops));
    write_file(out / "fig2.svg", svg::fig2_panels(report, cfg.targets.front()));
    if (cfg.export_jsonl) write_file(out / "simulated.jsonl", to_jsonl(to_eval_set(generate(sc))));
    return 0;
}

int cmd_metrics(const RunConfig& cfg) {
    check_targets(cfg);
    if (!cfg.provider.empty() || !cfg.judge_url.empty()) throw UsageError("metrics takes no decisiveness provider");
    const std::string path = single_input(cfg);
    const EvalSet set = load_set(path);
    require_clean(set, path);

    const auto summary = summarize(set);
    const auto pairs = scored_labels(set);
    if (pairs.empty()) throw Error(path + ": no record has both a confidence and a known correctness");

    const std::size_t bins = cfg.bins ? cfg.bins : kDefaultEceBins;
    const auto calib = calibration_report(pairs, bins);
    const auto curve = tradeoff_curve(pairs);

    ordered_json auroc_json;
    const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](const ScoredLabel& p) { return p.label == 1; });
    const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](const ScoredLabel& p) { return p.label == 0; });
    if (has_pos && has_neg) {
        auroc_json = {{"value", auroc(pairs)}, {"defined", true}};
    } else {
        auroc_json = {{"value", nullptr}, {"defined", false}, {"reason", has_pos ? "all correct" : "all incorrect"}};
        fmt::print(stderr, "{}: AUROC undefined, only one class present\n", path);
    }

    ordered_json taxes = ordered_json::array();
    std::vector<OperatingPoint> ops;
    const bool tax_defined = curve.points.front().utility > 0.0;
    for (double t : cfg.targets) {
        if (tax_defined) {
            ops.push_back(utility_tax(curve, t));
            taxes.push_back(io::to_json(ops.back()));
        } else {
            taxes.push_back({{"target_error", t}, {"defined", false}, {"reason", "no correct answers"}});
        }
    }

    const auto out = prepare_out(cfg);
    ordered_json j;
    j["input"] = path;
    j["summary"] = io::to_json(summary);
    j["scored_records"] = pairs.size();
    j["auroc"] = auroc_json;
    j["calibration"] = io::to_json(calib);
    j["no_abstention"] = {{"utility", curve.points.front().utility}, {"total_error", curve.points.front().total_error}};
    j["utility_tax"] = taxes;
    write_json(out / "metrics.json", j);
    write_json(out / "calibration.json", io::to_json(calib));
    write_file(out / "reliability.csv", io::reliability_csv(calib.bins));
    write_file(out / "curve.csv", io::curve_csv(curve));
    write_file(out / "tax.csv", io::tax_csv(ops));
    return 0;
}

std::unique_ptr<ContradictionProvider> make_contradiction(const RunConfig& cfg) {
    if (cfg.contradiction == "containment") return containment_contradiction();
    throw UsageError("unknown --contradiction '" + cfg.contradiction + "' (available: containment)");
}

int cmd_faithfulness(const RunConfig& cfg) {
    const std::string path = single_input(cfg);
    const EvalSet set = load_set(path);
    require_clean(set, path);

    const std::string provider = cfg.provider.empty() ? "lexicon" : cfg.provider;
    if (provider != "judge" && !cfg.judge_url.empty()) throw UsageError("--judge-url requires --provider judge");
    if (provider != "lexicon" && !cfg.lexicon_path.empty()) throw UsageError("--lexicon requires --provider lexicon");
    if (provider != "fixture" && !cfg.fixture_path.empty()) throw UsageError("--fixture requires --provider fixture");

    const auto contradiction = make_contradiction(cfg);
    const auto out = prepare_out(cfg);
    const std::size_t bins = cfg.bins ? cfg.bins : kDefaultCmfgBins;

    std::unique_ptr<DecisivenessProvider> dec;
    std::unique_ptr<JudgeDecisiveness> judge;
    if (provider == "lexicon") {
        dec = lexicon_decisiveness(cfg.lexicon_path.empty() ? Lexicon::defaults() : Lexicon::load(cfg.lexicon_path));
    } else if (provider == "fixture") {
        if (cfg.fixture_path.empty()) throw UsageError("--provider fixture needs --fixture <file>");
        dec = std::make_unique<FixtureDecisiveness>(FixtureDecisiveness::load(cfg.fixture_path));
    } else if (provider == "judge") {
        if (cfg.judge_url.empty()) throw UsageError("--provider judge needs --judge-url");
        if (cfg.judge_concurrency == 0) throw UsageError("--judge-concurrency must be positive");
        JudgeConfig jc;
        jc.base_url = cfg.judge_url;
        jc.max_in_flight = cfg.judge_concurrency;
        jc.timeout = std::chrono::milliseconds(cfg.judge_timeout_ms);
        jc.max_retries = cfg.judge_retries;
        jc.backoff_initial = std::chrono::milliseconds(cfg.judge_backoff_ms);
        jc.jitter_seed = cfg.seed;
        judge = judge_decisiveness(jc);

        // Score every record lacking a decisiveness up front, concurrently.
        std::vector<JudgeRequest> requests;
        std::vector<const AnswerRecord*> owners;
        for (const auto& r : set) {
            if (r.decisiveness) continue;
            requests.push_back({r.question, r.response, r.assertion});
            owners.push_back(&r);
        }
        const auto outcome = judge->score_batch(requests);
        auto fixture = std::make_unique<FixtureDecisiveness>();
        for (std::size_t i = 0; i < requests.size(); ++i) {
            if (!outcome.errors[i].empty()) {
                fmt::print(stderr, "{}: record '{}': {}\n", path, owners[i]->id, outcome.errors[i]);
                continue;
            }
            fixture->add(requests[i].question, requests[i].response, requests[i].assertion, outcome.values[i]);
        }
        write_json(out / "judge_cache.json", io::to_json(judge->cache_manifest(), judge->stats()));
        if (!outcome.ok()) throw Error("judge provider failed for one or more records");
        dec = std::move(fixture);
    } else if (provider != "none") {
        throw UsageError("unknown --provider '" + provider + "' (lexicon, judge, fixture, none)");
    }

    const auto report = cmfg(set, bins, *contradiction, dec.get());
    auto j = io::to_json(report);
    j["provider"] = provider;
    j["contradiction"] = cfg.contradiction;
    write_json(out / "faithfulness.json", j);
    write_file(out / "faithfulness_bins.csv", io::faithfulness_bins_csv(report));
    return 0;
}

std::string model_name_of(const EvalSet& set, const std::string& path) {
    if (!set.empty()) {
        const auto& meta = set.records().front().meta;
        if (auto it = meta.find("model"); it != meta.end() && !it->second.empty()) return it->second;
    }
    return fs::path(path).stem().string();
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_frontier(const RunConfig& cfg) {
    check_targets(cfg);
    if (!cfg.provider.empty() || !cfg.judge_url.empty()) throw UsageError("frontier takes no decisiveness provider");
    if (cfg.inputs.empty() && cfg.curves.empty() && cfg.spillover_path.empty())
        throw UsageError("frontier needs --in model files, --curves, or --spillover");
    if (!cfg.curves.empty() && cfg.curves.size() != 2) throw UsageError("--curves takes exactly two curve CSV files");

    const auto out = prepare_out(cfg);

    if (!cfg.inputs.empty()) {
        std::vector<ScoreboardRow> rows;
        for (const auto& path : cfg.inputs) {
            const auto set = load_set(path);
            require_clean(set, path);
            rows.push_back({model_name_of(set, path), summarize(set)});
        }
        std::stable_sort(rows.begin(), rows.end(),
                         [](const ScoreboardRow& a, const ScoreboardRow& b) { return a.model_name < b.model_name; });
        const auto table = scatter_data(rows);
        write_file(out / "scatter.csv", io::scatter_csv(table));
        write_file(out / "scatter.svg", svg::scatter_plot(table));
    }

    if (!cfg.curves.empty()) {
        const auto a = io::parse_curve_csv(read_text(cfg.curves[0]));
        const auto b = io::parse_curve_csv(read_text(cfg.curves[1]));
        std::vector<FixedErrorComparison> rows;
        ordered_json arr = ordered_json::array();
        for (double t : cfg.targets) {
            rows.push_back(compare_at_fixed_error(a, b, t));
            arr.push_back(io::to_json(rows.back()));
        }
        write_file(out / "comparison.csv", io::comparison_csv(rows));
        write_json(out / "comparison.json", {{"curve_a", cfg.curves[0]}, {"curve_b", cfg.curves[1]}, {"rows", arr}});
    }

    if (!cfg.spillover_path.empty()) {
        const fs::path manifest_path(cfg.spillover_path);
        json manifest;
        try {
            manifest = json::parse(read_text(manifest_path));
        } catch (const json::parse_error& e) {
            throw UsageError(std::string("spillover manifest: ") + e.what());
        }
        if (!manifest.contains("tasks") || !manifest["tasks"].is_object() || manifest["tasks"].empty())
            throw UsageError("spillover manifest needs a non-empty 'tasks' object");
        const auto base_dir = manifest_path.parent_path();
        std::map<std::string, std::pair<EvalSet, EvalSet>> tasks;
        for (const auto& [name, entry] : manifest["tasks"].items()) {
            if (!entry.contains("baseline") || !entry.contains("intervention"))
                throw UsageError("spillover task '" + name + "' needs 'baseline' and 'intervention'");
            auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
            tasks.emplace(name, std::make_pair(load_set(resolve(entry["baseline"].get<std::string>()).string()),
                                               load_set(resolve(entry["intervention"].get<std::string>()).string())));
        }
        const auto rep = spillover_report(tasks);
        write_file(out / "spillover.csv", io::spillover_csv(rep));
        write_json(out / "spillover.json", io::to_json(rep));
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    RunConfig cfg;
    CLI::App app{"Reliability metrics for LLM answers: calibration, discrimination, faithfulness"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Beta-mixture simulation: reliability diagram and utility-error tradeoff");
    add_common(sim, cfg, "Not used by simulate");
    sim->add_option("--n", cfg.n, "Number of simulated answers")->capture_default_str();
    sim->add_option("--base-error", cfg.base_error, "Fraction of incorrect answers")->capture_default_str();
    sim->add_option("--correct-shape", cfg.correct_shape, "Beta(alpha,beta) for correct answers")
        ->delimiter(',')
        ->expected(2)
        ->capture_default_str();
    sim->add_option("--incorrect-shape", cfg.incorrect_shape, "Beta(alpha,beta) for incorrect answers")
        ->delimiter(',')
        ->expected(2)
        ->capture_default_str();
    sim->add_option("--auroc", cfg.family_auroc,
                    "Pick shapes from the one-parameter family with this analytic AUROC (overrides shapes)");
    sim->add_option("--sim-config", cfg.sim_config_path, "SimConfig JSON document");
    sim->add_flag("--export-jsonl", cfg.export_jsonl, "Also write the simulated records as JSONL");

    auto* met = app.add_subcommand("metrics", "Scoreboard, calibration, AUROC and utility tax for a JSONL file");
    add_common(met, cfg, "Not used by metrics");

    auto* fth = app.add_subcommand("faithfulness", "Faithfulness of expressed uncertainty and cMFG");
    add_common(fth, cfg, "Decisiveness provider: lexicon (default), judge, fixture, none");
    fth->add_option("--lexicon", cfg.lexicon_path, "Hedge lexicon JSON for the lexicon provider");
    fth->add_option("--fixture", cfg.fixture_path, "Pre-scored decisiveness JSONL for the fixture provider");
    fth->add_option("--contradiction", cfg.contradiction, "Contradiction provider: containment")->capture_default_str();
    fth->add_option("--judge-timeout-ms", cfg.judge_timeout_ms, "Per-request judge timeout")->capture_default_str();
    fth->add_option("--judge-retries", cfg.judge_retries, "Retries for 429/5xx/transport failures")
        ->capture_default_str();
    fth->add_option("--judge-backoff-ms", cfg.judge_backoff_ms, "Initial retry backoff")->capture_default_str();

    auto* fro = app.add_subcommand("frontier", "Scatter of accuracy vs attempted accuracy, fixed-error comparison, spillover");
    add_common(fro, cfg, "Not used by frontier");
    fro->add_option("--curves", cfg.curves, "Two curve CSV files to compare at each target");
    fro->add_option("--spillover", cfg.spillover_path, "JSON manifest {tasks: {name: {baseline, intervention}}}");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.subcommand = sub->get_name();
    try {
        if (!cfg.config_path.empty()) apply_config_file(sub, cfg.config_path);
        if (cfg.subcommand == "simulate") return cmd_simulate(cfg, sub);
        if (cfg.subcommand == "metrics") return cmd_metrics(cfg);
        if (cfg.subcommand == "faithfulness") return cmd_faithfulness(cfg);
        return cmd_frontier(cfg);
    } catch (const UsageError& e) {
        fmt::print(stderr, "{}: {}\n", cfg.subcommand, e.what());
        return 2;
    } catch (const CLI::Error& e) {
        fmt::print(stderr, "{}: {}\n", cfg.subcommand, e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "{}: {}\n", cfg.subcommand, e.what());
        return 1;
    }
}

}  // namespace llmrel::cli
