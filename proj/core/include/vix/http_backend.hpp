#pragma once

#include "vix/backends.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vix {

/// Transport settings for the OpenAI-compatible endpoints. The default retry
/// policy is three retries at 1s/2s/4s for transport failures and 429/5xx
/// statuses; a request always ends in either a response or a typed error.
struct HttpOptions {
    std::string base_url; // e.g. "http://host:8000/v1"
    std::string model;
    std::string api_key;
    int timeout_s = 120;
    std::vector<int> backoff_ms = {1000, 2000, 4000};
    std::function<void(int)> sleeper; // injectable for tests; default sleeps
};

class HttpClient; // pimpl around the vendored HTTP client

/// Chat-completions client. Offered tools travel as standard function
/// schemas; a tool_calls reply maps onto ChatResponse::tool_call (first call
/// wins when the server returns several).
class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(HttpOptions options);
    ~HttpChatBackend() override;
    ChatResponse chat(const ChatRequest& req) override;

private:
    std::unique_ptr<HttpClient> client_;
};

/// Embeddings client. The dimension pins on the first response and every
/// later call is checked against it; vectors are normalized locally.
class HttpTextEmbedder final : public TextEmbedder {
public:
    explicit HttpTextEmbedder(HttpOptions options);
    ~HttpTextEmbedder() override;
    std::vector<float> embed_text(std::string_view text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::unique_ptr<HttpClient> client_;
    std::size_t dim_ = 0;
};

/// Cross-modal embeddings client: frames travel to the same embeddings
/// endpoint as base64 data URLs, text queries as plain strings.
class HttpVisualEmbedder final : public VisualEmbedder {
public:
    explicit HttpVisualEmbedder(HttpOptions options);
    ~HttpVisualEmbedder() override;
    std::vector<float> embed_frames(const std::vector<FrameRef>& frames) override;
    std::vector<float> embed_query(std::string_view text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::vector<float> embed_inputs(const nlohmann::json& inputs);

    std::unique_ptr<HttpClient> client_;
    std::size_t dim_ = 0;
};

/// VLM over chat-completions: the prompt plus frame images as data-URL
/// content parts.
class HttpVisionBackend final : public VisionBackend {
public:
    HttpVisionBackend(HttpOptions options, std::size_t max_frames);
    ~HttpVisionBackend() override;
    std::string vision_answer(const VisionRequest& req) override;
    std::size_t max_frames() const override { return max_frames_; }

private:
    std::unique_ptr<HttpClient> client_;
    std::size_t max_frames_;
};

} // namespace vix
