#pragma once

// External text-generation endpoint client (chat-completion wire format).
// Kept out of storymovie.hpp so the core library does not pull in httplib.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "storymovie/error.hpp"

namespace storymovie {

/// Where and how to reach the judge. The token itself never lives here, only
/// the name of the environment variable holding it.
struct JudgeEndpoint {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;
  double timeout_s = 120.0;
  int max_attempts = 3;
  int backoff_ms = 1000;
  double temperature = 0.0;
};

struct HttpReply {
  int status = 0;  // 0 when the request never got a response
  std::string body;
  std::string transport_error;
};

using JudgeTransport = std::function<HttpReply(const std::string& request_body)>;
using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Endpoint descriptor file: {"base_url", "path", "model", "api_key_env",
/// "timeout_s", "max_attempts", "backoff_ms", "temperature"}.
inline JudgeEndpoint judge_endpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "endpoint descriptor must be a JSON object");
  static constexpr std::string_view known[] = {"base_url",     "path",       "model",      "api_key_env",
                                               "timeout_s",    "max_attempts", "backoff_ms", "temperature",
                                               "schema_version"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw Error(ErrorCode::InvalidConfig, "unknown endpoint key '" + key + "'");
    }
  }
  JudgeEndpoint e;
  try {
    e.base_url = j.at("base_url").get<std::string>();
    e.model = j.at("model").get<std::string>();
    e.path = j.value("path", e.path);
    e.api_key_env = j.value("api_key_env", e.api_key_env);
    e.timeout_s = j.value("timeout_s", e.timeout_s);
    e.max_attempts = j.value("max_attempts", e.max_attempts);
    e.backoff_ms = j.value("backoff_ms", e.backoff_ms);
    e.temperature = j.value("temperature", e.temperature);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidConfig, std::string("endpoint descriptor: ") + ex.what());
  }
  if (e.timeout_s <= 0) throw Error(ErrorCode::InvalidConfig, "'timeout_s' must be positive");
  if (e.max_attempts < 1) throw Error(ErrorCode::InvalidConfig, "'max_attempts' must be at least 1");
  if (e.backoff_ms < 0) throw Error(ErrorCode::InvalidConfig, "'backoff_ms' must be non-negative");
  return e;
}

inline std::string build_chat_request(const std::string& prompt, const JudgeEndpoint& endpoint) {
  nlohmann::json body = {
      {"model", endpoint.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", endpoint.temperature},
  };
  return body.dump();
}

/// Pulls choices[0].message.content out of a chat-completion response.
inline std::string extract_chat_content(const std::string& body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedResponse, "response is not JSON");
  const auto* content = [&]() -> const nlohmann::json* {
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
      return nullptr;
    }
    const auto& first = doc["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content")) return nullptr;
    return &first["message"]["content"];
  }();
  if (!content || !content->is_string()) {
    throw Error(ErrorCode::MalformedResponse, "response has no choices[0].message.content");
  }
  return content->get<std::string>();
}

/// HTTP transport over cpp-httplib. Reads the bearer token from the
/// endpoint's environment variable at call time.
inline JudgeTransport http_transport(const JudgeEndpoint& endpoint) {
  return [endpoint](const std::string& request_body) {
    httplib::Client client(endpoint.base_url);
    const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(endpoint.timeout_s * 1000));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
      if (const char* token = std::getenv(endpoint.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }
    HttpReply reply;
    auto res = client.Post(endpoint.path, headers, request_body, "application/json");
    if (!res) {
      reply.transport_error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  };
}

/// Sends one prompt and returns the raw completion text. Connection failures,
/// 429 and 5xx are retried with exponential backoff up to max_attempts;
/// 401/403 fail immediately.
inline std::string call_judge(const std::string& prompt, const JudgeEndpoint& endpoint,
                              const JudgeTransport& transport, const SleepFn& sleep = {}) {
  const std::string body = build_chat_request(prompt, endpoint);
  const int attempts = std::max(1, endpoint.max_attempts);
  HttpReply last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(endpoint.backoff_ms)
                                                   << (attempt - 1));
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
    last = transport(body);
    if (last.status == 200) return extract_chat_content(last.body);
    if (last.status == 401 || last.status == 403) {
      throw Error(ErrorCode::Auth, "judge endpoint rejected credentials (HTTP " +
                                       std::to_string(last.status) + ")");
    }
    const bool transient = last.status == 0 || last.status == 429 || last.status >= 500;
    if (!transient) {
      throw Error(ErrorCode::Transport,
                  "judge endpoint returned HTTP " + std::to_string(last.status));
    }
  }
  if (last.status == 429) {
    throw Error(ErrorCode::RateLimited,
                "judge endpoint still rate limited after " + std::to_string(attempts) + " attempts");
  }
  throw Error(ErrorCode::Transport,
              last.status == 0 ? "judge endpoint unreachable: " + last.transport_error
                               : "judge endpoint returned HTTP " + std::to_string(last.status));
}

inline std::string call_judge(const std::string& prompt, const JudgeEndpoint& endpoint) {
  return call_judge(prompt, endpoint, http_transport(endpoint));
}

}  // namespace storymovie
