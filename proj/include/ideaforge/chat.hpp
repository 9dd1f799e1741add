#pragma once

// Uniform chat-completion interface: live HTTP endpoints (de-facto
// chat-completions JSON shape) and deterministic scripted mocks, plus the
// idea harmonization call and scalar rating extraction.

#include <chrono>
#include <cstdlib>
#include <deque>
#include <istream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ideaforge/httplib_compat.hpp"
#include <json.hpp>

#include "ideaforge/corpus.hpp"
#include "ideaforge/prompts.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::chat {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;
  std::optional<double> temperature;
  std::optional<int> max_output_tokens;
  std::optional<std::string> reasoning_effort;  // low | high | default
};

struct TokenUsage {
  long long prompt = 0;
  long long completion = 0;
};

struct ChatReply {
  std::string content;
  TokenUsage token_usage;
  long long latency_ms = 0;
  int attempts = 1;
};

inline void validate_request(const ChatRequest& req) {
  if (req.messages.empty())
    throw GatewayError("chat request must contain at least one message");
  if (req.temperature && req.reasoning_effort)
    throw GatewayError(
        "temperature and reasoning_effort are mutually exclusive");
}

inline std::string request_text(const ChatRequest& req) {
  std::string all;
  for (const auto& m : req.messages) {
    all += m.content;
    all += '\n';
  }
  return all;
}

class ChatGateway {
 public:
  virtual ~ChatGateway() = default;
  virtual ChatReply complete(const ChatRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock: a queue of {match, reply} entries consumed strictly in
// order. `match`, when present, asserts that the request text contains the
// substring; a mismatch means the script and the run have diverged and is a
// hard error. State is per-instance; give each conversation its own.

struct MockScriptEntry {
  std::optional<std::string> match;
  std::string reply;
};

class MockChatGateway : public ChatGateway {
 public:
  MockChatGateway() = default;
  explicit MockChatGateway(std::vector<MockScriptEntry> entries) {
    for (auto& e : entries) queue_.push_back(std::move(e));
  }

  // JSON Lines of {"match": optional substring, "reply": text}.
  static MockChatGateway from_jsonl(std::istream& is) {
    std::vector<MockScriptEntry> entries;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw SchemaError("mock script line " + std::to_string(line_no) +
                          ": " + e.what());
      }
      MockScriptEntry entry;
      if (j.contains("match") && !j.at("match").is_null())
        entry.match = j.at("match").get<std::string>();
      entry.reply = j.at("reply").get<std::string>();
      entries.push_back(std::move(entry));
    }
    return MockChatGateway(std::move(entries));
  }

  void push(MockScriptEntry e) { queue_.push_back(std::move(e)); }
  void push_reply(std::string reply) { queue_.push_back({std::nullopt, std::move(reply)}); }
  size_t remaining() const { return queue_.size(); }

  ChatReply complete(const ChatRequest& req) override {
    validate_request(req);
    if (queue_.empty()) throw GatewayError("mock script exhausted");
    MockScriptEntry e = std::move(queue_.front());
    queue_.pop_front();
    if (e.match && request_text(req).find(*e.match) == std::string::npos)
      throw GatewayError("mock script mismatch: expected request containing '" +
                         *e.match + "'");
    ChatReply r;
    r.content = std::move(e.reply);
    long long prompt_tokens = 0;
    for (const auto& m : req.messages)
      prompt_tokens += static_cast<long long>(word_count(m.content));
    r.token_usage.prompt = prompt_tokens;
    r.token_usage.completion = static_cast<long long>(word_count(r.content));
    return r;
  }

 private:
  std::deque<MockScriptEntry> queue_;
};

// ---------------------------------------------------------------------------
// Live HTTP endpoint

struct EndpointConfig {
  std::string provider;  // key lookup: IDEAFORGE_API_KEY_<PROVIDER>
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::optional<std::string> api_key;  // overrides the env var when set
  // Provider-specific field mapping: send `wire_model` instead of the
  // profile's model name, and/or force a reasoning_effort value.
  std::optional<std::string> wire_model;
  std::optional<std::string> reasoning_effort;
  int max_attempts = 3;
  int backoff_base_ms = 1000;
  int timeout_sec = 120;
};

inline std::string api_key_env_name(const std::string& provider) {
  std::string name = "IDEAFORGE_API_KEY_";
  for (char c : provider)
    name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

inline std::string resolve_api_key(const EndpointConfig& cfg) {
  if (cfg.api_key) return *cfg.api_key;
  const std::string env = api_key_env_name(cfg.provider);
  const char* v = std::getenv(env.c_str());
  if (!v || !*v)
    throw ConfigError("missing credential: set environment variable " + env);
  return v;
}

namespace detail {
inline bool is_transient_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}
}  // namespace detail

// One chat completion against a live endpoint. Transient failures (429/5xx,
// connection errors) are retried with exponential backoff 1s/2s/4s scaled by
// backoff_base_ms, with +-20% jitter derived from the request body hash.
// Token usage is taken from the successful attempt only.
inline ChatReply chat_complete(const ChatRequest& req, const EndpointConfig& cfg) {
  validate_request(req);
  const std::string key = resolve_api_key(cfg);

  json body;
  body["model"] = cfg.wire_model ? *cfg.wire_model : req.model_name;
  body["messages"] = json::array();
  for (const auto& m : req.messages)
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  if (req.temperature) body["temperature"] = *req.temperature;
  if (req.max_output_tokens) body["max_tokens"] = *req.max_output_tokens;
  const std::optional<std::string>& effort =
      req.reasoning_effort ? req.reasoning_effort : cfg.reasoning_effort;
  if (effort && *effort != "default") body["reasoning_effort"] = *effort;
  const std::string payload = body.dump();

  httplib::Client cli(cfg.base_url);
  cli.set_connection_timeout(cfg.timeout_sec);
  cli.set_read_timeout(cfg.timeout_sec);
  cli.set_default_headers({{"Authorization", "Bearer " + key}});

  const auto started = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    auto res = cli.Post(cfg.path, payload, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      json rj;
      try {
        rj = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw GatewayError(std::string("bad provider response: ") + e.what());
      }
      ChatReply out;
      try {
        out.content = rj.at("choices").at(0).at("message").at("content")
                          .get<std::string>();
      } catch (const json::exception&) {
        throw GatewayError("provider response missing choices[0].message.content");
      }
      if (rj.contains("usage")) {
        out.token_usage.prompt = rj["usage"].value("prompt_tokens", 0LL);
        out.token_usage.completion = rj["usage"].value("completion_tokens", 0LL);
      }
      out.attempts = attempt;
      out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
      return out;
    }

    bool transient;
    if (!res) {
      transient = true;
      last_error = "connection error (" + httplib::to_string(res.error()) + ")";
    } else {
      transient = detail::is_transient_status(res->status);
      last_error = "HTTP " + std::to_string(res->status);
    }
    if (!transient)
      throw GatewayError("chat endpoint failed: " + last_error);
    if (attempt == cfg.max_attempts) break;

    // 1s, 2s, 4s scaled, +-20% jitter from the payload hash.
    const double base =
        static_cast<double>(cfg.backoff_base_ms) * static_cast<double>(1 << (attempt - 1));
    DetRng jitter_rng(sha256_seed64(payload + "#" + std::to_string(attempt)));
    const double factor = 0.8 + 0.4 * jitter_rng.uniform01();
    std::this_thread::sleep_for(
        std::chrono::milliseconds(static_cast<long long>(base * factor)));
  }
  throw GatewayError("chat endpoint failed after " +
                     std::to_string(cfg.max_attempts) + " attempts: " + last_error);
}

class HttpChatGateway : public ChatGateway {
 public:
  explicit HttpChatGateway(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
  ChatReply complete(const ChatRequest& req) override {
    return chat_complete(req, cfg_);
  }
  const EndpointConfig& config() const { return cfg_; }

 private:
  EndpointConfig cfg_;
};

// ---------------------------------------------------------------------------
// Scalar rating extraction: first integer token, range-checked (rejected,
// never coerced).

inline int parse_scalar_rating(const std::string& text, int lo, int hi) {
  if (lo >= hi) throw Error("parse_scalar_rating: lo must be < hi");
  long long v = 0;
  if (!first_integer_token(text, &v))
    throw GatewayError("no integer found in rating reply: '" + text + "'");
  if (v < lo || v > hi)
    throw GatewayError("rating " + std::to_string(v) + " outside [" +
                       std::to_string(lo) + "," + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

// ---------------------------------------------------------------------------
// Idea harmonization: pinned system prompt, user template, temperature 0.

struct HarmonizeResult {
  Idea idea;
  bool style_violation = false;   // first/second-person pronouns in reply
  bool length_violation = false;  // > 120 whitespace tokens
};

namespace detail {
inline bool has_first_or_second_person(const std::string& text) {
  static const std::vector<std::string> banned{"we", "i", "you", "us", "our"};
  std::string token;
  auto check = [&]() {
    if (token.empty()) return false;
    for (const auto& b : banned)
      if (token == b) return true;
    return false;
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      if (check()) return true;
      token.clear();
    }
  }
  return check();
}
}  // namespace detail

inline HarmonizeResult harmonize_idea(const Idea& idea, ChatGateway& gateway,
                                      const std::string& model_name = "gpt-4.1") {
  if (idea.raw_text.empty())
    throw Error("harmonize_idea: raw_text must be non-empty");
  ChatRequest req;
  req.model_name = model_name;
  req.temperature = 0.0;
  req.messages.push_back({"system", prompts::kHarmonizationSystemPrompt});
  req.messages.push_back(
      {"user", prompts::harmonization_user_prompt(idea.raw_text)});
  const ChatReply reply = gateway.complete(req);

  HarmonizeResult res;
  res.idea = idea;
  res.idea.harmonized_text = trim(reply.content);
  res.style_violation = detail::has_first_or_second_person(*res.idea.harmonized_text);
  res.length_violation = word_count(*res.idea.harmonized_text) > 120;
  return res;
}

}  // namespace ideaforge::chat
