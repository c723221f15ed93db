#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "json.hpp"
#include "llmrel/judge.hpp"
#include "stub_judge.hpp"

using namespace llmrel;
using json = nlohmann::json;
using testsupport::StubJudge;
using testsupport::judge_ok;

TEST(Judge, ReturnsStubValue) {
    StubJudge stub([](int, const json& body) {
        EXPECT_EQ(body.at("question"), "q");
        EXPECT_EQ(body.at("response"), "r");
        EXPECT_EQ(body.at("assertion"), "a");
        return judge_ok(0.8);
    });
    JudgeDecisiveness judge(stub.config());
    EXPECT_EQ(judge.score("q", "r", "a"), 0.8);
    EXPECT_EQ(stub.calls(), 1);
}

TEST(Judge, OutOfRangeIsContractViolation) {
    StubJudge stub([](int, const json&) { return judge_ok(1.4); });
    JudgeDecisiveness judge(stub.config());
    EXPECT_THROW(judge.score("q", "r", "a"), ContractViolation);
}

TEST(Judge, MalformedReplyIsContractViolation) {
    StubJudge stub([](int, const json&) { return std::pair<int, std::string>{200, R"({"score": 0.5})"}; });
    JudgeDecisiveness judge(stub.config());
    EXPECT_THROW(judge.score("q", "r", "a"), ContractViolation);
}

TEST(Judge, RetriesRetryableStatusThenSucceeds) {
    StubJudge stub([](int idx, const json&) {
        if (idx == 0) return std::pair<int, std::string>{503, "busy"};
        if (idx == 1) return std::pair<int, std::string>{429, "slow down"};
        return judge_ok(0.35);
    });
    JudgeDecisiveness judge(stub.config());
    EXPECT_EQ(judge.score("q", "r", "a"), 0.35);
    EXPECT_EQ(stub.calls(), 3);
    EXPECT_EQ(judge.stats().retries, 2u);
    EXPECT_EQ(judge.stats().http_calls, 3u);
}

TEST(Judge, NonRetryableStatusFailsImmediately) {
    StubJudge stub([](int, const json&) { return std::pair<int, std::string>{400, "bad request"}; });
    JudgeDecisiveness judge(stub.config());
    try {
        judge.score("q", "r", "a");
        FAIL() << "expected ProviderError";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.status(), 400);
        EXPECT_EQ(e.body(), "bad request");
    }
    EXPECT_EQ(stub.calls(), 1);
}

TEST(Judge, RetriesAreBounded) {
    StubJudge stub([](int, const json&) { return std::pair<int, std::string>{500, "down"}; });
    auto cfg = stub.config();
    cfg.max_retries = 2;
    JudgeDecisiveness judge(cfg);
    EXPECT_THROW(judge.score("q", "r", "a"), ProviderError);
    EXPECT_EQ(stub.calls(), 3);
}

TEST(Judge, TransportFailureIsRetriedThenReported) {
    JudgeConfig cfg;
    {
        StubJudge gone([](int, const json&) { return judge_ok(0.5); });
        cfg = gone.config();
    }  // server shut down: nothing listens on the port any more
    cfg.max_retries = 1;
    JudgeDecisiveness judge(cfg);
    EXPECT_THROW(judge.score("q", "r", "a"), ProviderError);
    EXPECT_EQ(judge.stats().http_calls, 2u);
}

TEST(Judge, CacheHitsForRepeatedInputs) {
    StubJudge stub([](int, const json& body) { return judge_ok(body.at("assertion") == "a" ? 0.2 : 0.9); });
    JudgeDecisiveness judge(stub.config());
    std::vector<JudgeRequest> reqs{{"q", "r", "a"}, {"q", "r", "b"}, {"q", "r", "a"}, {"q", "r", "a"}, {"q", "r", "b"}};
    const auto out = judge.score_batch(reqs);
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(out.values, (std::vector<double>{0.2, 0.9, 0.2, 0.2, 0.9}));
    EXPECT_EQ(stub.calls(), 2);
    const auto st = judge.stats();
    EXPECT_EQ(st.lookups, 5u);
    EXPECT_EQ(st.cache_hits, 3u);
    EXPECT_EQ(judge.score("q", "r", "b"), 0.9);
    EXPECT_EQ(stub.calls(), 2);
    const auto manifest = judge.cache_manifest();
    ASSERT_EQ(manifest.size(), 2u);
    EXPECT_LT(manifest[0].digest, manifest[1].digest);
}

TEST(Judge, BatchReportsPerItemErrors) {
    StubJudge stub([](int, const json& body) {
        if (body.at("assertion") == "bad") return judge_ok(-0.5);
        return judge_ok(0.6);
    });
    JudgeDecisiveness judge(stub.config());
    const auto out = judge.score_batch({{"q", "r", "good"}, {"q", "r", "bad"}});
    EXPECT_FALSE(out.ok());
    EXPECT_TRUE(out.errors[0].empty());
    EXPECT_FALSE(out.errors[1].empty());
    EXPECT_EQ(out.values[0], 0.6);
}

TEST(Judge, ConcurrencyIsBounded) {
    std::atomic<int> in_flight{0}, peak{0};
    StubJudge stub([&](int, const json&) {
        const int now = ++in_flight;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --in_flight;
        return judge_ok(0.5);
    });
    auto cfg = stub.config();
    cfg.max_in_flight = 2;
    JudgeDecisiveness judge(cfg);
    std::vector<JudgeRequest> reqs;
    for (int i = 0; i < 8; ++i) reqs.push_back({"q", "r", std::to_string(i)});
    ASSERT_TRUE(judge.score_batch(reqs).ok());
    EXPECT_LE(peak.load(), 2);
    EXPECT_EQ(stub.calls(), 8);
}

TEST(Judge, DigestSeparatesFields) {
    EXPECT_NE(judge_digest("ab", "c", ""), judge_digest("a", "bc", ""));
    EXPECT_EQ(judge_digest("q", "r", "a").size(), 16u);
}
