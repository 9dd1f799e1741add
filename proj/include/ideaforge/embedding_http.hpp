#pragma once

// Live embeddings endpoint: list of input texts in, list of float arrays out.
// Kept separate from embedding.hpp so the analytics headers stay free of the
// HTTP dependency.

#include <string>
#include <vector>

#include "ideaforge/httplib_compat.hpp"
#include <json.hpp>

#include "ideaforge/chat.hpp"
#include "ideaforge/embedding.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::embed {

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(chat::EndpointConfig cfg, std::string model_id)
      : cfg_(std::move(cfg)), model_id_(std::move(model_id)) {
    if (cfg_.path == "/v1/chat/completions") cfg_.path = "/v1/embeddings";
  }

  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override {
    const std::string key = chat::resolve_api_key(cfg_);
    nlohmann::json body;
    body["model"] = cfg_.wire_model ? *cfg_.wire_model : model_id_;
    body["input"] = texts;

    httplib::Client cli(cfg_.base_url);
    cli.set_connection_timeout(cfg_.timeout_sec);
    cli.set_read_timeout(cfg_.timeout_sec);
    cli.set_default_headers({{"Authorization", "Bearer " + key}});
    auto res = cli.Post(cfg_.path, body.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300)
      throw GatewayError("embeddings endpoint failed: " +
                         (res ? "HTTP " + std::to_string(res->status)
                              : std::string("connection error")));
    nlohmann::json rj;
    try {
      rj = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw GatewayError(std::string("bad embeddings response: ") + e.what());
    }
    std::vector<std::vector<double>> out;
    try {
      if (rj.contains("data")) {
        for (const auto& item : rj.at("data"))
          out.push_back(item.at("embedding").get<std::vector<double>>());
      } else {
        out = rj.at("embeddings").get<std::vector<std::vector<double>>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError(std::string("bad embeddings response shape: ") + e.what());
    }
    return out;
  }

 private:
  chat::EndpointConfig cfg_;
  std::string model_id_;
};

}  // namespace ideaforge::embed
