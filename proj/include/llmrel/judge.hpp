#pragma once

// HTTP client for an external decisiveness judge.
//
// Wire contract: POST <path> with {"question", "response", "assertion"}; the
// reply is {"decisiveness": x} with x in [0,1]. 429 and 5xx replies and
// transport failures are retried with capped exponential backoff and jitter;
// any other non-200 status fails immediately.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <future>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "llmrel/faithful.hpp"

namespace llmrel {

struct JudgeConfig {
    std::string base_url = "http://127.0.0.1:8080";  // scheme://host:port
    std::string path = "/score";
    std::chrono::milliseconds timeout{10000};
    std::size_t max_retries = 4;
    std::chrono::milliseconds backoff_initial{200};
    std::chrono::milliseconds backoff_max{5000};
    std::size_t max_in_flight = 4;
    std::uint64_t jitter_seed = 0;
};

/// Non-retryable reply, or retries exhausted.
class ProviderError : public Error {
public:
    ProviderError(int status, std::string body, const std::string& what)
        : Error(what), status_(status), body_(std::move(body)) {}
    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

struct JudgeRequest {
    std::string question;
    std::string response;
    std::string assertion;
};

struct JudgeStats {
    std::size_t lookups = 0;     // score() calls, including cache hits
    std::size_t cache_hits = 0;  // lookups answered without a new request
    std::size_t http_calls = 0;  // attempts sent over the wire, retries included
    std::size_t retries = 0;
};

struct CacheEntry {
    std::string digest;
    double decisiveness = 0.0;
};

/// FNV-1a 64-bit digest of the request fields, as 16 hex digits.
std::string judge_digest(std::string_view question, std::string_view response, std::string_view assertion);

/// Thread-safe judge client. Identical inputs are sent at most once per
/// instance; concurrent lookups of the same input wait for the first.
class JudgeDecisiveness final : public DecisivenessProvider {
public:
    explicit JudgeDecisiveness(JudgeConfig config);

    double score(std::string_view question, std::string_view response, std::string_view assertion) override;

    struct BatchOutcome {
        std::vector<double> values;       // input order
        std::vector<std::string> errors;  // empty string on success
        bool ok() const;
    };

    /// Scores a batch with at most `max_in_flight` concurrent requests.
    BatchOutcome score_batch(const std::vector<JudgeRequest>& requests);

    JudgeStats stats() const;
    /// Successful cache entries sorted by digest.
    std::vector<CacheEntry> cache_manifest() const;

private:
    double fetch(const JudgeRequest& request);
    std::chrono::milliseconds backoff(std::size_t attempt);

    JudgeConfig config_;
    std::string host_;
    int port_ = 0;

    mutable std::mutex mu_;
    std::unordered_map<std::string, std::shared_future<double>> cache_;  // keyed by digest
    std::uint64_t jitter_state_;

    std::atomic<std::size_t> lookups_{0};
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> retries_{0};
};

std::unique_ptr<JudgeDecisiveness> judge_decisiveness(JudgeConfig config);

}  // namespace llmrel
