#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "llmrel/judge.hpp"

namespace testsupport {

// Local stand-in for the judge endpoint. `reply` maps (call index, request
// body) to (status, body).
class StubJudge {
public:
    using Reply = std::function<std::pair<int, std::string>(int, const nlohmann::json&)>;

    explicit StubJudge(Reply reply) : reply_(std::move(reply)) {
        server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            const int idx = calls_++;
            auto [status, body] = reply_(idx, nlohmann::json::parse(req.body));
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubJudge() {
        server_.stop();
        thread_.join();
    }

    llmrel::JudgeConfig config() const {
        llmrel::JudgeConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_);
        c.backoff_initial = std::chrono::milliseconds(5);
        c.backoff_max = std::chrono::milliseconds(20);
        c.timeout = std::chrono::milliseconds(2000);
        return c;
    }
    int calls() const { return calls_.load(); }

private:
    Reply reply_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> calls_{0};
};

inline std::pair<int, std::string> judge_ok(double v) { return {200, nlohmann::json{{"decisiveness", v}}.dump()}; }

}  // namespace testsupport
