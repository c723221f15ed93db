#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "llmrel/svg.hpp"
#include "stub_judge.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kData = LLMREL_TEST_DATA;

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "llmrel");
    return llmrel::cli::run(args);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(CliSimulate, DefaultRunAndDeterminism) {
    const auto out1 = testsupport::fresh_dir("sim1"), out2 = testsupport::fresh_dir("sim2");
    ASSERT_EQ(run({"simulate", "--out", out1.string()}), 0);
    for (const char* f : {"fig2_report.json", "curve.csv", "reliability.csv", "tax.csv", "fig2.svg"})
        EXPECT_TRUE(fs::exists(out1 / f)) << f;
    const auto rep = load_json(out1 / "fig2_report.json");
    const double tax = rep["tax_at_targets"][0]["discard_fraction"].get<double>();
    EXPECT_GE(tax, 0.48);
    EXPECT_LE(tax, 0.56);

    ASSERT_EQ(run({"simulate", "--out", out2.string()}), 0);
    for (const char* f : {"fig2_report.json", "curve.csv", "reliability.csv", "tax.csv", "fig2.svg"})
        EXPECT_EQ(slurp(out1 / f), slurp(out2 / f)) << f;
}

TEST(CliSimulate, GenerousTargetCostsNothing) {
    const auto out = testsupport::fresh_dir("sim_generous");
    ASSERT_EQ(run({"simulate", "--out", out.string(), "--n", "5000", "--target", "0.30"}), 0);
    const auto rep = load_json(out / "fig2_report.json");
    EXPECT_EQ(rep["tax_at_targets"][0]["discard_fraction"].get<double>(), 0.0);
}

TEST(CliSimulate, FamilyAndExport) {
    const auto out = testsupport::fresh_dir("sim_family");
    ASSERT_EQ(run({"simulate", "--out", out.string(), "--n", "2000", "--auroc", "0.85", "--export-jsonl"}), 0);
    const auto rep = load_json(out / "fig2_report.json");
    EXPECT_NEAR(rep["family"]["analytic_auroc"].get<double>(), 0.85, 5e-4);
    EXPECT_EQ(rep["config"]["correct_shape"][0].get<double>(), 1.0 + rep["family"]["gamma"].get<double>());
    std::ifstream in(out / "simulated.jsonl");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 2000u);
}

TEST(CliSimulate, ConfigFileAndFlagPrecedence) {
    const auto out = testsupport::fresh_dir("sim_config");
    write(out / "cfg.json", R"({"n": 1000, "targets": [0.1, 0.2], "bins": 8})");
    ASSERT_EQ(run({"simulate", "--out", out.string(), "--config", (out / "cfg.json").string(), "--bins", "5"}), 0);
    const auto rep = load_json(out / "fig2_report.json");
    EXPECT_EQ(rep["config"]["n"].get<int>(), 1000);
    EXPECT_EQ(rep["tax_at_targets"].size(), 2u);
    EXPECT_EQ(rep["reliability"].size(), 5u);

    write(out / "bad.json", R"({"no_such_option": 1})");
    EXPECT_NE(run({"simulate", "--out", out.string(), "--config", (out / "bad.json").string()}), 0);
}

TEST(CliSimulate, RejectsBadTargets) {
    const auto out = testsupport::fresh_dir("sim_bad");
    EXPECT_NE(run({"simulate", "--out", out.string(), "--target", "1.5"}), 0);
    EXPECT_NE(run({"simulate", "--out", out.string(), "--n", "0"}), 0);
}

TEST(CliMetrics, GoldenTenRecords) {
    const auto expected = load_json(kData / "golden10_expected.json");
    const auto out = testsupport::fresh_dir("metrics_golden");
    ASSERT_EQ(run({"metrics", "--in", (kData / "golden10.jsonl").string(), "--out", out.string(), "--bins", "10",
                   "--targets", "0.1,0.2,0.4"}),
              0);
    const auto got = load_json(out / "metrics.json");
    for (const auto& [k, v] : expected["summary"].items()) {
        if (v.is_number_float()) {
            EXPECT_NEAR(got["summary"][k].get<double>(), v.get<double>(), 1e-12) << k;
        } else {
            EXPECT_EQ(got["summary"][k], v) << k;
        }
    }
    EXPECT_EQ(got["scored_records"], expected["scored_records"]);
    EXPECT_TRUE(got["auroc"]["defined"].get<bool>());
    EXPECT_NEAR(got["auroc"]["value"].get<double>(), expected["auroc"].get<double>(), 1e-12);
    EXPECT_NEAR(got["calibration"]["ece"].get<double>(), expected["ece"].get<double>(), 1e-12);
    EXPECT_NEAR(got["no_abstention"]["utility"].get<double>(), 0.625, 1e-12);
    EXPECT_NEAR(got["no_abstention"]["total_error"].get<double>(), 0.375, 1e-12);
    ASSERT_EQ(got["utility_tax"].size(), expected["utility_tax"].size());
    for (std::size_t i = 0; i < expected["utility_tax"].size(); ++i)
        for (const auto& [k, v] : expected["utility_tax"][i].items())
            EXPECT_NEAR(got["utility_tax"][i][k].get<double>(), v.get<double>(), 1e-12) << i << " " << k;

    const auto csv = slurp(out / "reliability.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_lo,bin_hi,count,mean_conf,mean_acc");
    EXPECT_TRUE(fs::exists(out / "curve.csv"));
    EXPECT_TRUE(fs::exists(out / "tax.csv"));
}

TEST(CliMetrics, PerfectModel) {
    const auto out = testsupport::fresh_dir("metrics_perfect");
    ASSERT_EQ(run({"metrics", "--in", (kData / "perfect.jsonl").string(), "--out", out.string()}), 0);
    const auto got = load_json(out / "metrics.json");
    EXPECT_FALSE(got["auroc"]["defined"].get<bool>());
    EXPECT_TRUE(got["auroc"]["value"].is_null());
    EXPECT_EQ(got["utility_tax"][0]["discard_fraction"].get<double>(), 0.0);
}

TEST(CliMetrics, EmptyFile) {
    const auto out = testsupport::fresh_dir("metrics_empty");
    testing::internal::CaptureStderr();
    const int rc = run({"metrics", "--in", (kData / "empty.jsonl").string(), "--out", out.string()});
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_NE(rc, 0);
    EXPECT_NE(err.find("empty input"), std::string::npos) << err;
}

TEST(CliMetrics, SchemaViolationsAreFatal) {
    const auto out = testsupport::fresh_dir("metrics_bad");
    write(out / "bad.jsonl", "{\"id\":\"a\",\"question\":\"q\",\"response\":\"r\",\"attempted\":true,\"confidence\":1.4,\"correct\":true}\n");
    testing::internal::CaptureStderr();
    const int rc = run({"metrics", "--in", (out / "bad.jsonl").string(), "--out", out.string()});
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_NE(rc, 0);
    EXPECT_NE(err.find("confidence_range"), std::string::npos) << err;
    EXPECT_FALSE(fs::exists(out / "metrics.json"));
}

TEST(CliFaithfulness, AlignedFixture) {
    const auto out = testsupport::fresh_dir("faith_aligned");
    ASSERT_EQ(run({"faithfulness", "--in", (kData / "aligned.jsonl").string(), "--out", out.string()}), 0);
    EXPECT_EQ(load_json(out / "faithfulness.json")["cmfg"].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(out / "faithfulness_bins.csv"));
}

TEST(CliFaithfulness, LexiconReadsHedges) {
    const auto out = testsupport::fresh_dir("faith_lexicon");
    ASSERT_EQ(run({"faithfulness", "--in", (kData / "hedged.jsonl").string(), "--out", out.string()}), 0);
    const auto rep = load_json(out / "faithfulness.json");
    const auto& recs = rep["per_record"];
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_DOUBLE_EQ(recs[0]["decisiveness"].get<double>(), 0.9);
    EXPECT_DOUBLE_EQ(recs[0]["confidence"].get<double>(), 0.75);
    EXPECT_DOUBLE_EQ(recs[1]["decisiveness"].get<double>(), 0.7);
    EXPECT_DOUBLE_EQ(recs[2]["decisiveness"].get<double>(), 0.95);
    EXPECT_DOUBLE_EQ(recs[2]["faithfulness"].get<double>(), 0.55);

    const auto again = testsupport::fresh_dir("faith_lexicon2");
    ASSERT_EQ(run({"faithfulness", "--in", (kData / "hedged.jsonl").string(), "--out", again.string()}), 0);
    EXPECT_EQ(slurp(out / "faithfulness.json"), slurp(again / "faithfulness.json"));
    EXPECT_EQ(slurp(out / "faithfulness_bins.csv"), slurp(again / "faithfulness_bins.csv"));
}

TEST(CliFaithfulness, JudgeProvider) {
    const auto out = testsupport::fresh_dir("faith_judge");
    // Five records over three distinct (question, response, assertion)
    // inputs: two lookups should come from the cache.
    std::string lines;
    const char* answers[] = {"a", "b", "a", "c", "b"};
    for (int i = 0; i < 5; ++i)
        lines += json{{"id", "j" + std::to_string(i)}, {"question", "q"}, {"response", "r"}, {"assertion", answers[i]},
                      {"attempted", true}, {"confidence", 0.5}}
                     .dump() +
                 "\n";
    write(out / "in.jsonl", lines);
    testsupport::StubJudge stub([](int, const json& body) {
        const auto a = body.at("assertion").get<std::string>();
        return testsupport::judge_ok(a == "a" ? 0.1 : a == "b" ? 0.6 : 0.9);
    });
    const auto url = stub.config().base_url;
    ASSERT_EQ(run({"faithfulness", "--in", (out / "in.jsonl").string(), "--out", out.string(), "--provider", "judge",
                   "--judge-url", url, "--judge-concurrency", "2"}),
              0);
    const auto rep = load_json(out / "faithfulness.json");
    const std::vector<double> want{0.1, 0.6, 0.1, 0.9, 0.6};
    for (std::size_t i = 0; i < want.size(); ++i)
        EXPECT_EQ(rep["per_record"][i]["decisiveness"].get<double>(), want[i]);
    const auto cache = load_json(out / "judge_cache.json");
    EXPECT_EQ(cache["cache_hits"].get<int>(), 2);
    EXPECT_EQ(stub.calls(), 3);
}

TEST(CliFaithfulness, JudgeFailureNamesRecord) {
    const auto out = testsupport::fresh_dir("faith_judge_bad");
    write(out / "in.jsonl", json{{"id", "broken-1"}, {"question", "q"}, {"response", "r"}, {"attempted", true},
                                 {"confidence", 0.5}}
                                    .dump() +
                                "\n");
    testsupport::StubJudge stub([](int, const json&) { return testsupport::judge_ok(7.0); });
    testing::internal::CaptureStderr();
    const int rc = run({"faithfulness", "--in", (out / "in.jsonl").string(), "--out", out.string(), "--provider",
                        "judge", "--judge-url", stub.config().base_url});
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_NE(rc, 0);
    EXPECT_NE(err.find("broken-1"), std::string::npos) << err;
}

TEST(CliFaithfulness, ProviderFlagsMustAgree) {
    const auto out = testsupport::fresh_dir("faith_flags");
    const auto in = (kData / "aligned.jsonl").string();
    EXPECT_NE(run({"faithfulness", "--in", in, "--out", out.string(), "--provider", "judge"}), 0);
    EXPECT_NE(run({"faithfulness", "--in", in, "--out", out.string(), "--judge-url", "http://127.0.0.1:1"}), 0);
    EXPECT_NE(run({"faithfulness", "--in", in, "--out", out.string(), "--provider", "oracle"}), 0);
    EXPECT_EQ(run({"faithfulness", "--in", in, "--out", out.string(), "--provider", "none"}), 0);
}

TEST(CliFrontier, IdenticalCurvesHaveZeroDelta) {
    const auto sim = testsupport::fresh_dir("frontier_sim");
    ASSERT_EQ(run({"simulate", "--out", sim.string(), "--n", "3000"}), 0);
    const auto out = testsupport::fresh_dir("frontier_cmp");
    const auto curve = (sim / "curve.csv").string();
    ASSERT_EQ(run({"frontier", "--curves", curve, curve, "--out", out.string(), "--targets", "0.02,0.05,0.1"}), 0);
    std::istringstream csv(slurp(out / "comparison.csv"));
    std::string header, line;
    std::getline(csv, header);
    std::vector<std::string> cols;
    for (std::stringstream hs(header); std::getline(hs, line, ',');) cols.push_back(line);
    const auto delta_col = std::find(cols.begin(), cols.end(), "delta") - cols.begin();
    ASSERT_LT(delta_col, static_cast<long>(cols.size()));
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<std::string> f;
        for (std::stringstream ls(line); std::getline(ls, header, ',');) f.push_back(header);
        EXPECT_EQ(std::stod(f[delta_col]), 0.0);
        ++rows;
    }
    EXPECT_EQ(rows, 3);
}

TEST(CliFrontier, ScatterOrderingAndDiagonal) {
    const auto dir = testsupport::fresh_dir("frontier_scatter");
    auto model = [&](const std::string& name, int correct, int wrong, int refused) {
        std::string lines;
        int k = 0;
        for (int i = 0; i < correct + wrong + refused; ++i, ++k) {
            json r{{"id", name + std::to_string(k)}, {"question", "q"}, {"response", "r"}, {"attempted", i < correct + wrong},
                   {"meta", {{"model", name}}}};
            if (i < correct + wrong) r["correct"] = i < correct;
            lines += r.dump() + "\n";
        }
        const auto p = dir / (name + ".jsonl");
        write(p, lines);
        return p.string();
    };
    const auto zeta = model("zeta", 6, 4, 0), alpha = model("alpha", 3, 1, 4), mid = model("mid", 5, 5, 2);
    ASSERT_EQ(run({"frontier", "--in", zeta, alpha, mid, "--out", dir.string()}), 0);

    std::istringstream csv(slurp(dir / "scatter.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<std::string> names;
    while (std::getline(csv, line)) names.push_back(line.substr(0, line.find(',')));
    EXPECT_EQ(names, (std::vector<std::string>{"alpha", "mid", "zeta"}));

    // The refusal-free model's marker sits on the y = x diagonal in pixels.
    const auto svg = slurp(dir / "scatter.svg");
    const std::regex circle(R"re(<circle cx="([0-9.]+)" cy="([0-9.]+)"[^>]*><title>([^<]*)</title>)re");
    bool found = false;
    for (std::sregex_iterator it(svg.begin(), svg.end(), circle), end; it != end; ++it) {
        if ((*it)[3].str().rfind("zeta", 0) != 0) continue;
        const auto& f = llmrel::svg::kScatterFrame;
        const double x = (std::stod((*it)[1]) - f.left) / f.width;
        const double y = 1.0 - (std::stod((*it)[2]) - f.top) / f.height;
        EXPECT_NEAR(x, 0.6, 1e-3);
        EXPECT_NEAR(y, x, 1e-3);
        found = true;
    }
    EXPECT_TRUE(found);
}

TEST(CliFrontier, Spillover) {
    const auto dir = testsupport::fresh_dir("frontier_spill");
    auto set = [&](const std::string& file, int correct, int wrong, int refused) {
        std::string lines;
        for (int i = 0; i < correct + wrong + refused; ++i) {
            json r{{"id", file + std::to_string(i)}, {"question", "q"}, {"response", "r"}, {"attempted", i < correct + wrong}};
            if (i < correct + wrong) r["correct"] = i < correct;
            lines += r.dump() + "\n";
        }
        write(dir / file, lines);
    };
    set("a_base.jsonl", 6, 4, 0);
    set("a_int.jsonl", 5, 3, 2);
    set("b_base.jsonl", 6, 4, 0);
    set("b_int.jsonl", 6, 4, 0);
    write(dir / "manifest.json", R"({"tasks": {"b": {"baseline": "b_base.jsonl", "intervention": "b_int.jsonl"},
                                               "a": {"baseline": "a_base.jsonl", "intervention": "a_int.jsonl"}}})");
    ASSERT_EQ(run({"frontier", "--spillover", (dir / "manifest.json").string(), "--out", dir.string()}), 0);
    const auto rep = load_json(dir / "spillover.json");
    ASSERT_EQ(rep["tasks"].size(), 2u);
    EXPECT_EQ(rep["tasks"][0]["task"], "a");
    EXPECT_DOUBLE_EQ(rep["tasks"][0]["delta_refusal"].get<double>(), 0.2);
    EXPECT_EQ(rep["tasks"][1]["delta_refusal"].get<double>(), 0.0);
    EXPECT_TRUE(fs::exists(dir / "spillover.csv"));
}

TEST(Cli, HelpListsEveryFlag) {
    const std::map<std::string, std::vector<std::string>> flags{
        {"simulate", {"--n", "--base-error", "--correct-shape", "--incorrect-shape", "--auroc", "--export-jsonl"}},
        {"metrics", {}},
        {"faithfulness", {"--lexicon", "--fixture", "--contradiction", "--judge-timeout-ms", "--judge-retries"}},
        {"frontier", {"--curves", "--spillover"}},
    };
    const std::vector<std::string> common{"--in", "--out", "--seed", "--targets", "--bins", "--provider",
                                          "--judge-url", "--judge-concurrency", "--config"};
    for (const auto& [cmd, extra] : flags) {
        testing::internal::CaptureStdout();
        EXPECT_EQ(run({cmd, "--help"}), 0);
        const auto help = testing::internal::GetCapturedStdout();
        for (const auto& f : common) EXPECT_NE(help.find(f), std::string::npos) << cmd << " " << f;
        for (const auto& f : extra) EXPECT_NE(help.find(f), std::string::npos) << cmd << " " << f;
    }
}

TEST(Cli, UnknownSubcommandFails) {
    testing::internal::CaptureStderr();
    EXPECT_NE(run({"bogus"}), 0);
    testing::internal::GetCapturedStderr();
}
