#pragma once

#include "vix/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

struct ChatMessage {
    std::string role; // system | user | assistant | tool
    std::string content;
};

/// JSON-schema description of one callable tool, in the shape the
/// chat-completions "tools" array expects.
struct ToolSchema {
    std::string name;
    std::string description;
    nlohmann::json parameters; // JSON schema for the arguments object
};

struct ToolCall {
    std::string name;
    nlohmann::json arguments;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::vector<ToolSchema> tools;          // offered schemas; empty = plain chat
    std::optional<int> max_output_tokens;

    /// All message content joined, for mock rule matching and logging.
    std::string joined_text() const;
};

/// Either assistant text or a single structured tool invocation.
struct ChatResponse {
    std::string text;
    std::optional<ToolCall> tool_call;
};

struct VisionRequest {
    std::string prompt;
    std::vector<FrameRef> frames;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Throws BackendUnavailable on transport failure after retries and
    /// EmptyPayload when the request has no messages.
    virtual ChatResponse chat(const ChatRequest& req) = 0;
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    /// Unit-normalized vector of `dimension()` entries. Throws EmptyPayload on
    /// empty text; the dimension never changes over the backend's lifetime.
    virtual std::vector<float> embed_text(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

/// Cross-modal embedder: frame sets and text queries land in one space, so a
/// text query can retrieve visually similar segments.
class VisualEmbedder {
public:
    virtual ~VisualEmbedder() = default;
    /// Throws EmptyPayload on an empty frame list.
    virtual std::vector<float> embed_frames(const std::vector<FrameRef>& frames) = 0;
    virtual std::vector<float> embed_query(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

class VisionBackend {
public:
    virtual ~VisionBackend() = default;
    /// Answers a question over the given frames. Throws EmptyPayload on zero
    /// frames and FrameBudgetExceeded when frames exceed max_frames().
    virtual std::string vision_answer(const VisionRequest& req) = 0;
    virtual std::size_t max_frames() const = 0;
};

/// The configured model roles: "builder" constructs the index (captioning,
/// entities, scenes) and "reasoner" plans tool calls and browses scenes. The
/// two vision backends split the same way: the captioner describes segments at
/// build time, the inspector verifies visual details at query time.
struct BackendSet {
    std::shared_ptr<ChatBackend> builder;
    std::shared_ptr<ChatBackend> reasoner;
    std::shared_ptr<VisionBackend> captioner;
    std::shared_ptr<VisionBackend> inspector;
    std::shared_ptr<TextEmbedder> text_embedder;
    std::shared_ptr<VisualEmbedder> visual_embedder;
};

/// Shared precondition checks used by every VisionBackend implementation.
void check_vision_request(const VisionRequest& req, std::size_t max_frames);

/// Enforces a unit-normalized, finite vector of the pinned dimension on every
/// embedder result.
void check_embedding(const std::vector<float>& v, std::size_t dimension, std::string_view who);

} // namespace vix
