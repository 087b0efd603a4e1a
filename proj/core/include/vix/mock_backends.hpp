#pragma once

#include "vix/backends.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

/// Deterministic bag-of-tokens embedding: whitespace tokens hash into one of
/// `dim` buckets with a ±1 sign, the bucket sums are averaged and the result
/// L2-normalized. Shared tokens raise cosine similarity, no model required.
/// Returns an all-zero vector when the text has no tokens.
std::vector<float> hash_embed_tokens(std::string_view text, std::size_t dim, std::uint64_t salt);

class HashTextEmbedder final : public TextEmbedder {
public:
    explicit HashTextEmbedder(std::size_t dim = 64, std::uint64_t salt = 0x5458);
    std::vector<float> embed_text(std::string_view text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t salt_;
};

/// Cross-modal mock: a frame set embeds as the normalized mean of per-frame
/// hash vectors (each frame hashed by file name), so the result is
/// order-insensitive; text queries hash into the same space.
class HashVisualEmbedder final : public VisualEmbedder {
public:
    explicit HashVisualEmbedder(std::size_t dim = 64, std::uint64_t salt = 0x5658);
    std::vector<float> embed_frames(const std::vector<FrameRef>& frames) override;
    std::vector<float> embed_query(std::string_view text) override;
    std::size_t dimension() const override { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t salt_;
};

/// One scripted response selector: fires when the serialized request contains
/// `contains` (empty matches everything). `once` rules are consumed on use.
struct PlaybookRule {
    std::string contains;
    std::optional<std::string> text;
    std::optional<ToolCall> tool;
    bool once = false;
    bool used = false;
};

/// Scripted behaviors for the mock model family, loadable from JSON:
/// {"chat_rules": [{"contains": ..., "text"|"tool"+"arguments": ..., "once": ...}],
///  "vision_rules": [{"contains": ..., "text": ..., "once": ...}]}.
struct Playbook {
    std::vector<PlaybookRule> chat_rules;
    std::vector<PlaybookRule> vision_rules;

    static Playbook from_json(const nlohmann::json& j);
    static Playbook from_file(const std::filesystem::path& path);
};

/// Pure FIFO script: every call pops the next queued response. Records the
/// requests it saw for assertions. Throws BackendUnavailable when the queue
/// runs dry.
class ScriptedChat final : public ChatBackend {
public:
    void push_text(std::string text);
    void push_tool(ToolCall call);
    void push(ChatResponse response);
    ChatResponse chat(const ChatRequest& req) override;
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::deque<ChatResponse> queue_;
    std::vector<ChatRequest> requests_;
};

/// Deterministic stand-in for the chat models: playbook rules first, then a
/// per-task synthesizer keyed on the prompt's task tag. The synthesizers
/// understand the prompt shapes produced by prompts.hpp and derive plausible
/// structured output from the request text alone, so whole-pipeline runs are
/// pure functions of their inputs.
class MockModelChat final : public ChatBackend {
public:
    MockModelChat() = default;
    explicit MockModelChat(Playbook playbook);
    ChatResponse chat(const ChatRequest& req) override;
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mu_;
    Playbook playbook_;
    std::vector<ChatRequest> requests_;
};

/// Vision counterpart: rules, then task synthesizers (segment captioning),
/// then a generic frame-count acknowledgement.
class MockVision final : public VisionBackend {
public:
    explicit MockVision(std::vector<PlaybookRule> rules = {}, std::size_t max_frames = 50);
    std::string vision_answer(const VisionRequest& req) override;
    std::size_t max_frames() const override { return max_frames_; }
    std::vector<VisionRequest> requests() const;

private:
    mutable std::mutex mu_;
    std::vector<PlaybookRule> rules_;
    std::size_t max_frames_;
    std::vector<VisionRequest> requests_;
};

/// Decorator that captures every request/response pair passing through.
class RecordingChat final : public ChatBackend {
public:
    struct Exchange {
        ChatRequest request;
        ChatResponse response;
    };

    explicit RecordingChat(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}
    ChatResponse chat(const ChatRequest& req) override;
    std::vector<Exchange> exchanges() const;

private:
    mutable std::mutex mu_;
    std::shared_ptr<ChatBackend> inner_;
    std::vector<Exchange> exchanges_;
};

} // namespace vix
