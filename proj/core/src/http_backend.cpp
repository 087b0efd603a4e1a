#include "vix/http_backend.hpp"

#include "vix/errors.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

namespace vix {

namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string origin;      // scheme://host:port
    std::string path_prefix; // e.g. "/v1"
};

ParsedUrl parse_base_url(const std::string& base_url) {
    if (base_url.empty())
        throw InputError("http backend requires a base_url");
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw InputError(fmt::format("base_url \"{}\" lacks a scheme", base_url));
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/')
        prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

std::string mime_for(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (char& c : ext)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == "jpg" || ext == "jpeg")
        return "image/jpeg";
    if (ext == "png")
        return "image/png";
    if (ext == "webp")
        return "image/webp";
    return "application/octet-stream";
}

std::string frame_data_url(const FrameRef& frame) {
    std::ifstream in(frame.path, std::ios::binary);
    if (!in)
        throw MissingFrames(fmt::format("cannot read frame {}", frame.path));
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fmt::format("data:{};base64,{}", mime_for(frame.path),
                       httplib::detail::base64_encode(bytes));
}

void normalize(std::vector<float>& v, std::string_view who) {
    double norm_sq = 0.0;
    for (float x : v)
        norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (norm_sq <= 0.0 || !std::isfinite(norm_sq))
        throw BackendUnavailable(fmt::format("{} returned a degenerate embedding", who));
    float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (float& x : v)
        x *= inv;
}

} // namespace

/// Shared POST-with-retries transport over one origin.
class HttpClient {
public:
    explicit HttpClient(HttpOptions options)
        : options_(std::move(options)), url_(parse_base_url(options_.base_url)) {
        if (!options_.sleeper)
            options_.sleeper = [](int ms) {
                std::this_thread::sleep_for(std::chrono::milliseconds(ms));
            };
    }

    const HttpOptions& options() const { return options_; }

    json post_json(const std::string& endpoint, const json& body) {
        std::string payload = body.dump();
        std::string path = url_.path_prefix + endpoint;
        std::string last_error;
        for (std::size_t attempt = 0;; ++attempt) {
            httplib::Client cli(url_.origin);
            cli.set_connection_timeout(options_.timeout_s, 0);
            cli.set_read_timeout(options_.timeout_s, 0);
            httplib::Headers headers;
            if (!options_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + options_.api_key);
            auto res = cli.Post(path, headers, payload, "application/json");
            if (res && res->status >= 200 && res->status < 300) {
                json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
                if (parsed.is_discarded())
                    throw BackendUnavailable(
                        fmt::format("{}{} returned unparseable JSON", url_.origin, path));
                return parsed;
            }
            bool retryable = !res || res->status == 429 || res->status >= 500;
            last_error = res ? fmt::format("status {}: {}", res->status,
                                           res->body.substr(0, 200))
                             : fmt::format("transport error ({})",
                                           httplib::to_string(res.error()));
            if (!retryable || attempt >= options_.backoff_ms.size())
                throw BackendUnavailable(
                    fmt::format("POST {}{} failed after {} attempt(s): {}", url_.origin, path,
                                attempt + 1, last_error));
            options_.sleeper(options_.backoff_ms[attempt]);
        }
    }

private:
    HttpOptions options_;
    ParsedUrl url_;
};

HttpChatBackend::HttpChatBackend(HttpOptions options)
    : client_(std::make_unique<HttpClient>(std::move(options))) {}

HttpChatBackend::~HttpChatBackend() = default;

ChatResponse HttpChatBackend::chat(const ChatRequest& req) {
    if (req.messages.empty())
        throw EmptyPayload("chat request with no messages");
    json messages = json::array();
    for (const ChatMessage& m : req.messages)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    json body{{"model", client_->options().model}, {"messages", messages}};
    if (!req.tools.empty()) {
        json tools = json::array();
        for (const ToolSchema& t : req.tools)
            tools.push_back({{"type", "function"},
                             {"function",
                              {{"name", t.name},
                               {"description", t.description},
                               {"parameters", t.parameters}}}});
        body["tools"] = tools;
    }
    if (req.max_output_tokens)
        body["max_tokens"] = *req.max_output_tokens;

    json reply = client_->post_json("/chat/completions", body);
    if (!reply.contains("choices") || reply["choices"].empty())
        throw BackendUnavailable("chat reply carries no choices");
    const json& message = reply["choices"][0].value("message", json::object());

    ChatResponse out;
    if (message.contains("content") && message["content"].is_string())
        out.text = message["content"].get<std::string>();
    if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
        !message["tool_calls"].empty()) {
        const json& call = message["tool_calls"][0].value("function", json::object());
        ToolCall tc;
        tc.name = call.value("name", "");
        std::string args = call.value("arguments", "{}");
        tc.arguments = json::parse(args, nullptr, /*allow_exceptions=*/false);
        if (tc.arguments.is_discarded())
            throw BackendRefusal(
                fmt::format("tool call \"{}\" carries unparseable arguments", tc.name));
        out.tool_call = std::move(tc);
    }
    return out;
}

namespace {

std::vector<float> parse_embedding_reply(const json& reply) {
    if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].empty())
        throw BackendUnavailable("embeddings reply carries no data");
    const json& vec = reply["data"][0].value("embedding", json::array());
    std::vector<float> out;
    out.reserve(vec.size());
    for (const json& x : vec) {
        if (!x.is_number())
            throw BackendUnavailable("embeddings reply carries non-numeric values");
        out.push_back(x.get<float>());
    }
    return out;
}

} // namespace

HttpTextEmbedder::HttpTextEmbedder(HttpOptions options)
    : client_(std::make_unique<HttpClient>(std::move(options))) {}

HttpTextEmbedder::~HttpTextEmbedder() = default;

std::vector<float> HttpTextEmbedder::embed_text(std::string_view text) {
    if (text.empty())
        throw EmptyPayload("embed_text over empty text");
    json body{{"model", client_->options().model},
              {"input", json::array({std::string(text)})}};
    std::vector<float> v = parse_embedding_reply(client_->post_json("/embeddings", body));
    normalize(v, "HttpTextEmbedder");
    if (dim_ == 0)
        dim_ = v.size();
    check_embedding(v, dim_, "HttpTextEmbedder");
    return v;
}

HttpVisualEmbedder::HttpVisualEmbedder(HttpOptions options)
    : client_(std::make_unique<HttpClient>(std::move(options))) {}

HttpVisualEmbedder::~HttpVisualEmbedder() = default;

std::vector<float> HttpVisualEmbedder::embed_inputs(const nlohmann::json& inputs) {
    json body{{"model", client_->options().model}, {"input", inputs}};
    std::vector<float> v = parse_embedding_reply(client_->post_json("/embeddings", body));
    normalize(v, "HttpVisualEmbedder");
    if (dim_ == 0)
        dim_ = v.size();
    check_embedding(v, dim_, "HttpVisualEmbedder");
    return v;
}

std::vector<float> HttpVisualEmbedder::embed_frames(const std::vector<FrameRef>& frames) {
    if (frames.empty())
        throw EmptyPayload("embed_frames over empty frame list");
    json inputs = json::array();
    for (const FrameRef& f : frames)
        inputs.push_back(frame_data_url(f));
    return embed_inputs(inputs);
}

std::vector<float> HttpVisualEmbedder::embed_query(std::string_view text) {
    if (text.empty())
        throw EmptyPayload("embed_query over empty text");
    return embed_inputs(json::array({std::string(text)}));
}

HttpVisionBackend::HttpVisionBackend(HttpOptions options, std::size_t max_frames)
    : client_(std::make_unique<HttpClient>(std::move(options))), max_frames_(max_frames) {}

HttpVisionBackend::~HttpVisionBackend() = default;

std::string HttpVisionBackend::vision_answer(const VisionRequest& req) {
    check_vision_request(req, max_frames_);
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", req.prompt}});
    for (const FrameRef& f : req.frames)
        content.push_back(
            {{"type", "image_url"}, {"image_url", {{"url", frame_data_url(f)}}}});
    json body{{"model", client_->options().model},
              {"messages", json::array({json{{"role", "user"}, {"content", content}}})}};
    json reply = client_->post_json("/chat/completions", body);
    if (!reply.contains("choices") || reply["choices"].empty())
        throw BackendUnavailable("vision reply carries no choices");
    const json& message = reply["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string())
        throw BackendRefusal("vision reply carries no text content");
    return message["content"].get<std::string>();
}

} // namespace vix
