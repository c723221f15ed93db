#include "llmrel/judge.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"

namespace llmrel {

using json = nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

bool retryable(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::string judge_digest(std::string_view question, std::string_view response, std::string_view assertion) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        // field separator so ("ab","c") and ("a","bc") differ
        h ^= 0xff;
        h *= 0x100000001b3ull;
    };
    mix(question);
    mix(response);
    mix(assertion);
    return fmt::format("{:016x}", h);
}

JudgeDecisiveness::JudgeDecisiveness(JudgeConfig config)
    : config_(std::move(config)), jitter_state_(config_.jitter_seed) {
    if (config_.max_in_flight == 0) throw Error("judge: max_in_flight must be positive");
    if (config_.base_url.empty()) throw Error("judge: empty endpoint url");
}

std::chrono::milliseconds JudgeDecisiveness::backoff(std::size_t attempt) {
    double u;
    {
        std::lock_guard lock(mu_);
        u = static_cast<double>(splitmix64(jitter_state_) >> 11) * 0x1.0p-53;
    }
    const double base = static_cast<double>(config_.backoff_initial.count()) * std::pow(2.0, static_cast<double>(attempt));
    const double capped = std::min(base, static_cast<double>(config_.backoff_max.count()));
    return std::chrono::milliseconds(static_cast<long long>(capped * (0.5 + 0.5 * u)));
}

double JudgeDecisiveness::fetch(const JudgeRequest& request) {
    const std::string body = json{{"question", request.question},
                                  {"response", request.response},
                                  {"assertion", request.assertion}}
                                 .dump();

    int last_status = 0;
    std::string last_body;
    for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            ++retries_;
            std::this_thread::sleep_for(backoff(attempt - 1));
        }
        httplib::Client client(config_.base_url);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        ++calls_;
        auto res = client.Post(config_.path, body, "application/json");
        if (!res) {
            last_status = 0;
            last_body = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const json::parse_error&) {
                throw ContractViolation("judge reply is not valid JSON: " + res->body);
            }
            if (!reply.is_object() || !reply.contains("decisiveness") || !reply["decisiveness"].is_number())
                throw ContractViolation("judge reply lacks a numeric 'decisiveness': " + res->body);
            const double d = reply["decisiveness"].get<double>();
            if (!(d >= 0.0 && d <= 1.0))
                throw ContractViolation(fmt::format("judge returned decisiveness {} outside [0,1]", d));
            return d;
        }
        last_status = res->status;
        last_body = res->body;
        if (!retryable(res->status))
            throw ProviderError(res->status, res->body, fmt::format("judge replied with status {}: {}", res->status, res->body));
    }
    throw ProviderError(last_status, last_body,
                        fmt::format("judge failed after {} attempts (last status {}): {}", config_.max_retries + 1,
                                    last_status, last_body));
}

double JudgeDecisiveness::score(std::string_view question, std::string_view response, std::string_view assertion) {
    ++lookups_;
    const std::string key = judge_digest(question, response, assertion);

    std::promise<double> promise;
    std::shared_future<double> future;
    bool owner = false;
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            cache_.emplace(key, future);
            owner = true;
        }
    }
    if (!owner) {
        ++hits_;
        return future.get();
    }
    try {
        promise.set_value(fetch({std::string(question), std::string(response), std::string(assertion)}));
    } catch (...) {
        promise.set_exception(std::current_exception());
    }
    return future.get();
}

bool JudgeDecisiveness::BatchOutcome::ok() const {
    return std::all_of(errors.begin(), errors.end(), [](const std::string& e) { return e.empty(); });
}

JudgeDecisiveness::BatchOutcome JudgeDecisiveness::score_batch(const std::vector<JudgeRequest>& requests) {
    BatchOutcome out;
    out.values.assign(requests.size(), 0.0);
    out.errors.assign(requests.size(), std::string{});
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                out.values[i] = score(requests[i].question, requests[i].response, requests[i].assertion);
            } catch (const std::exception& e) {
                out.errors[i] = e.what();
            }
        }
    };
    const std::size_t nthreads = std::min(config_.max_in_flight, requests.size());
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

JudgeStats JudgeDecisiveness::stats() const {
    return {lookups_.load(), hits_.load(), calls_.load(), retries_.load()};
}

std::vector<CacheEntry> JudgeDecisiveness::cache_manifest() const {
    std::vector<CacheEntry> out;
    std::lock_guard lock(mu_);
    for (const auto& [digest, fut] : cache_) {
        if (fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) continue;
        try {
            out.push_back({digest, fut.get()});
        } catch (...) {
        }
    }
    std::sort(out.begin(), out.end(), [](const CacheEntry& a, const CacheEntry& b) { return a.digest < b.digest; });
    return out;
}

std::unique_ptr<JudgeDecisiveness> judge_decisiveness(JudgeConfig config) {
    return std::make_unique<JudgeDecisiveness>(std::move(config));
}

}  // namespace llmrel
