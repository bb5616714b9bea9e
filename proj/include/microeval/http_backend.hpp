#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <string>
#include <utility>

#include "microeval/errors.hpp"
#include "microeval/gateway.hpp"

namespace microeval {

struct HttpBackendConfig {
    // Scheme, host and optional port, e.g. "https://api.example.com" or
    // "http://127.0.0.1:8080". Endpoint paths are appended to this.
    std::string base_url;
    // Sent as a bearer token when non-empty. Comes from the environment,
    // never from a config file.
    std::string api_key;
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{120};
};

// Talks to an OpenAI-compatible server: chat completions for generation and
// echoed completions with logprobs for token scoring. Each call uses a fresh
// connection so instances can be shared across threads.
class HttpBackend final : public ModelBackend {
  public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) throw PreconditionError("backend base URL is empty");
    }

    CompletionResult complete(const CompletionRequest& request) override {
        nlohmann::json body{
            {"model", request.model_id},
            {"messages",
             nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature},
            {"seed", request.seed},
            {"max_tokens", request.max_tokens},
        };
        const nlohmann::json response = post_json("/v1/chat/completions", body);
        try {
            const auto& choices = response.at("choices");
            if (!choices.is_array() || choices.empty())
                throw BackendError(BackendError::Kind::Protocol,
                                   "completion response has no choices");
            return CompletionResult{
                choices.at(0).at("message").at("content").get<std::string>()};
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::Protocol,
                               std::string("malformed completion response: ") + e.what());
        }
    }

    ScoreResult score_tokens(const std::string& model_id, const std::string& text) override {
        nlohmann::json body{
            {"model", model_id}, {"prompt", text},    {"max_tokens", 0},
            {"echo", true},      {"logprobs", 0},
        };
        const nlohmann::json response = post_json("/v1/completions", body);
        try {
            const auto& logprobs = response.at("choices").at(0).at("logprobs");
            const auto& tokens = logprobs.at("tokens");
            const auto& values = logprobs.at("token_logprobs");
            if (tokens.size() != values.size())
                throw BackendError(BackendError::Kind::Protocol,
                                   "token and logprob arrays differ in length");
            ScoreResult result;
            result.tokens.reserve(tokens.size());
            for (size_t i = 0; i < tokens.size(); ++i) {
                TokenScore score;
                score.token = tokens.at(i).get<std::string>();
                if (!values.at(i).is_null()) score.logprob = values.at(i).get<double>();
                result.tokens.push_back(std::move(score));
            }
            return result;
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::Protocol,
                               std::string("malformed scoring response: ") + e.what());
        }
    }

  private:
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.connect_timeout);
        client.set_read_timeout(config_.read_timeout);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res)
            throw BackendError(BackendError::Kind::Transport,
                               "request to " + config_.base_url + path +
                                   " failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw BackendError(BackendError::Kind::Http,
                               "HTTP " + std::to_string(res->status) + " from " + path,
                               res->status, res->body);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw BackendError(BackendError::Kind::Protocol,
                               std::string("response is not JSON: ") + e.what());
        }
    }

    HttpBackendConfig config_;
};

}  // namespace microeval
