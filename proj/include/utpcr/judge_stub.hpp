#pragma once

#include <atomic>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "utpcr/error.hpp"

namespace utpcr {

/// Canned-response HTTP server speaking the remote judge wire shape.
///
/// Script: {"fail_first": n, "rules": [{"contains": "...", "status": 200,
/// "content": "ACCEPT"} | {"contains": "...", "status": 200, "raw_body": "..."}],
/// "default": {"status": 200, "content": "ACCEPT"}}.
/// The first `fail_first` requests get HTTP 503. Rules match on a substring
/// of the concatenated text parts of the request; the first match wins.
class StubJudgeServer {
 public:
  explicit StubJudgeServer(nlohmann::json script) : script_(std::move(script)) {
    server_.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
  }

  static StubJudgeServer from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read stub script '" + path + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "stub script is not JSON");
    return StubJudgeServer(std::move(j));
  }

  StubJudgeServer(StubJudgeServer&& other) : StubJudgeServer(std::move(other.script_)) {}

  ~StubJudgeServer() { stop(); }

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error(ErrorCode::IoError, "stub server cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Blocks serving on the calling thread.
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw Error(ErrorCode::IoError, "stub server cannot listen");
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  int requests_served() const { return served_.load(); }

  std::vector<nlohmann::json> received() const {
    std::lock_guard<std::mutex> lock(mu_);
    return received_;
  }

 private:
  nlohmann::json script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<int> served_{0};
  mutable std::mutex mu_;
  std::vector<nlohmann::json> received_;

  void handle(const httplib::Request& req, httplib::Response& res) {
    const int n = served_.fetch_add(1);
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    {
      std::lock_guard<std::mutex> lock(mu_);
      received_.push_back(body);
    }
    if (n < script_.value("fail_first", 0)) {
      res.status = 503;
      res.set_content(R"({"error":"unavailable"})", "application/json");
      return;
    }
    std::string text;
    if (body.is_object() && body.contains("messages")) {
      for (const auto& m : body["messages"]) {
        if (!m.contains("content")) continue;
        const auto& c = m["content"];
        if (c.is_string()) text += c.get<std::string>() + "\n";
        if (!c.is_array()) continue;
        for (const auto& part : c) {
          if (part.value("type", "") == "text") text += part.value("text", "") + "\n";
        }
      }
    }
    std::optional<nlohmann::json> chosen;
    if (script_.contains("default")) chosen = script_.at("default");
    if (script_.contains("rules")) {
      for (const auto& rule : script_.at("rules")) {
        if (text.find(rule.value("contains", "")) != std::string::npos) {
          chosen = rule;
          break;
        }
      }
    }
    if (!chosen) {
      res.status = 404;
      return;
    }
    res.status = chosen->value("status", 200);
    if (chosen->contains("raw_body")) {
      res.set_content(chosen->at("raw_body").get<std::string>(), "application/json");
    } else {
      res.set_content(nlohmann::json{{"content", chosen->value("content", "")}}.dump(), "application/json");
    }
  }
};

}  // namespace utpcr
