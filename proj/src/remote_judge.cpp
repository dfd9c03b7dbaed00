#include <semaphore>
#include <thread>

#include <httplib.h>

#include "stef/judge.hpp"
#include "stef/json_io.hpp"

namespace stef::judge {

namespace {

using io::json;

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw TransportError("endpoint '" + url + "' has no scheme");
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string message_content(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return body;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const json& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content") &&
        c["message"]["content"].is_string()) {
      return c["message"]["content"].get<std::string>();
    }
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
  }
  return body;
}

}  // namespace

struct RemoteJudge::Impl {
  RemoteJudgeConfig cfg;
  Endpoint endpoint;
  std::counting_semaphore<1024> slots;

  explicit Impl(RemoteJudgeConfig c)
      : cfg(std::move(c)), endpoint(split_url(cfg.endpoint)), slots(cfg.max_in_flight) {}
};

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg) {
  if (cfg.endpoint.empty()) throw TransportError("no judge endpoint configured");
  if (cfg.max_attempts < 1) cfg.max_attempts = 1;
  if (cfg.max_in_flight < 1 || cfg.max_in_flight > 1024) {
    throw std::invalid_argument("max_in_flight must be within 1..1024");
  }
  impl_ = std::make_unique<Impl>(std::move(cfg));
}

RemoteJudge::~RemoteJudge() = default;

std::string RemoteJudge::complete(const std::string& prompt) {
  const auto& cfg = impl_->cfg;
  json body{{"model", cfg.model},
            {"temperature", 0},
            {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  std::string payload = body.dump();
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  auto backoff = cfg.backoff;
  std::string last_error;
  bool timed_out = false;
  int last_status = 0;
  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    // A fresh client per attempt keeps concurrent calls independent.
    httplib::Client client(impl_->endpoint.base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(impl_->endpoint.path, headers, payload, "application/json");
    if (res) {
      int status = res->status;
      last_status = status;
      if (status >= 200 && status < 300) return message_content(res->body);
      last_error = "judge endpoint answered HTTP " + std::to_string(status);
      timed_out = false;
      if (status < 500 && status != 429) throw TransportError(last_error, status);
    } else {
      auto err = res.error();
      auto elapsed = std::chrono::steady_clock::now() - started;
      timed_out = err == httplib::Error::ConnectionTimeout ||
                  (err == httplib::Error::Read && elapsed >= cfg.timeout);
      last_error = "judge request failed: " + httplib::to_string(err);
      last_status = 0;
    }
    if (attempt < cfg.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  if (timed_out) throw TimeoutExceeded(last_error);
  throw TransportError(last_error + " after " + std::to_string(cfg.max_attempts) + " attempts",
                       last_status);
}

JudgeOutput RemoteJudge::evaluate(const PromptBundle& bundle, const AlignmentRecord*) {
  std::string raw = complete(bundle.rendered_prompt);
  try {
    return parse_judge_output(raw);
  } catch (const MalformedJudgeOutput&) {
    // One reminder, then the failure stands.
    return parse_judge_output(complete(bundle.rendered_prompt + std::string(kReminder)));
  }
}

}  // namespace stef::judge
