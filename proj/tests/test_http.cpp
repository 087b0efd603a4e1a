#include "vix/errors.hpp"
#include "vix/http_backend.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>
#include <httplib.h>

#include <fmt/format.h>

#include <atomic>
#include <fstream>
#include <thread>

using namespace vix;
using namespace vixtest;

namespace {

/// In-process OpenAI-compatible endpoint stub.
class StubServer {
public:
    StubServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            ++chat_calls_;
            last_chat_body_ = req.body;
            if (fail_remaining_ > 0) {
                --fail_remaining_;
                res.status = fail_status_;
                res.set_content("overloaded", "text/plain");
                return;
            }
            res.set_content(chat_reply_, "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req,
                                              httplib::Response& res) {
            ++embed_calls_;
            last_embed_body_ = req.body;
            res.set_content(embed_reply_, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return fmt::format("http://127.0.0.1:{}/v1", port_); }

    HttpOptions options() const {
        HttpOptions opts;
        opts.base_url = base_url();
        opts.model = "test-model";
        opts.api_key = "test-key";
        opts.sleeper = [](int) {}; // no real sleeping in tests
        return opts;
    }

    void set_chat_reply(std::string body) { chat_reply_ = std::move(body); }
    void set_embed_reply(std::string body) { embed_reply_ = std::move(body); }
    void fail_next(int n, int status = 500) {
        fail_remaining_ = n;
        fail_status_ = status;
    }

    int chat_calls() const { return chat_calls_; }
    int embed_calls() const { return embed_calls_; }
    std::string last_chat_body() const { return last_chat_body_; }
    std::string last_embed_body() const { return last_embed_body_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> chat_calls_{0};
    std::atomic<int> embed_calls_{0};
    std::atomic<int> fail_remaining_{0};
    int fail_status_ = 500;
    std::string chat_reply_ =
        R"({"choices": [{"message": {"role": "assistant", "content": "hello there"}}]})";
    std::string embed_reply_ = R"({"data": [{"embedding": [3.0, 4.0]}]})";
    std::string last_chat_body_;
    std::string last_embed_body_;
};

ChatRequest simple_request() {
    ChatRequest req;
    req.messages.push_back({"system", "be brief"});
    req.messages.push_back({"user", "say hello"});
    return req;
}

} // namespace

TEST_CASE("http chat returns assistant text") {
    StubServer server;
    HttpChatBackend chat(server.options());
    ChatResponse resp = chat.chat(simple_request());
    CHECK(resp.text == "hello there");
    CHECK_FALSE(resp.tool_call.has_value());

    auto body = nlohmann::json::parse(server.last_chat_body());
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"].size() == 2);
}

TEST_CASE("http chat forwards tool schemas and parses tool calls") {
    StubServer server;
    server.set_chat_reply(R"({"choices": [{"message": {
        "role": "assistant",
        "content": "picking a tool",
        "tool_calls": [{"id": "1", "type": "function", "function": {
            "name": "global_scene_browse_tool",
            "arguments": "{\"query\": \"the opening\"}"}}]}}]})");
    HttpChatBackend chat(server.options());

    ChatRequest req = simple_request();
    req.tools.push_back(ToolSchema{"global_scene_browse_tool", "browse scenes",
                                   nlohmann::json{{"type", "object"}}});
    ChatResponse resp = chat.chat(req);
    REQUIRE(resp.tool_call.has_value());
    CHECK(resp.tool_call->name == "global_scene_browse_tool");
    CHECK(resp.tool_call->arguments["query"] == "the opening");
    CHECK(resp.text == "picking a tool");

    auto body = nlohmann::json::parse(server.last_chat_body());
    REQUIRE(body.contains("tools"));
    CHECK(body["tools"][0]["function"]["name"] == "global_scene_browse_tool");
}

TEST_CASE("http chat retries transient failures with backoff") {
    StubServer server;
    server.fail_next(2, 500);
    std::vector<int> slept;
    HttpOptions opts = server.options();
    opts.sleeper = [&](int ms) { slept.push_back(ms); };
    HttpChatBackend chat(opts);
    ChatResponse resp = chat.chat(simple_request());
    CHECK(resp.text == "hello there");
    CHECK(server.chat_calls() == 3);
    CHECK(slept == std::vector<int>{1000, 2000});
}

TEST_CASE("http chat gives up after the retry budget") {
    StubServer server;
    server.fail_next(10, 503);
    HttpChatBackend chat(server.options());
    CHECK_THROWS_AS(chat.chat(simple_request()), BackendUnavailable);
    CHECK(server.chat_calls() == 4); // initial + three retries
}

TEST_CASE("http chat does not retry client errors") {
    StubServer server;
    server.fail_next(1, 400);
    HttpChatBackend chat(server.options());
    CHECK_THROWS_AS(chat.chat(simple_request()), BackendUnavailable);
    CHECK(server.chat_calls() == 1);
}

TEST_CASE("unreachable hosts raise BackendUnavailable after retries") {
    HttpOptions opts;
    opts.base_url = "http://127.0.0.1:1/v1"; // nothing listens there
    opts.model = "m";
    opts.timeout_s = 1;
    opts.sleeper = [](int) {};
    HttpChatBackend chat(opts);
    CHECK_THROWS_AS(chat.chat(simple_request()), BackendUnavailable);
}

TEST_CASE("http embedder normalizes and pins its dimension") {
    StubServer server;
    HttpTextEmbedder embedder(server.options());
    auto v = embedder.embed_text("hello");
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(0.6)); // [3,4] normalized
    CHECK(v[1] == doctest::Approx(0.8));
    CHECK(embedder.dimension() == 2);

    // A dimension change mid-flight is an error.
    server.set_embed_reply(R"({"data": [{"embedding": [1.0, 0.0, 0.0]}]})");
    CHECK_THROWS_AS(embedder.embed_text("again"), DimensionMismatch);
    CHECK_THROWS_AS(embedder.embed_text(""), EmptyPayload);
}

TEST_CASE("http visual embedder sends frames as data urls") {
    StubServer server;
    TempDir dir;
    auto frame_path = dir.path() / "7.jpg";
    std::ofstream(frame_path, std::ios::binary) << "JPEGDATA";

    HttpVisualEmbedder embedder(server.options());
    auto v = embedder.embed_frames({FrameRef{7.0, frame_path.string()}});
    CHECK(v.size() == 2);
    auto body = nlohmann::json::parse(server.last_embed_body());
    std::string input = body["input"][0].get<std::string>();
    CHECK(input.rfind("data:image/jpeg;base64,", 0) == 0);

    auto q = embedder.embed_query("a red car");
    CHECK(q.size() == 2);
    auto body2 = nlohmann::json::parse(server.last_embed_body());
    CHECK(body2["input"][0] == "a red car");
}

TEST_CASE("http vision backend sends the prompt plus image parts") {
    StubServer server;
    server.set_chat_reply(
        R"({"choices": [{"message": {"role": "assistant", "content": "two performers"}}]})");
    TempDir dir;
    auto frame_path = dir.path() / "9.png";
    std::ofstream(frame_path, std::ios::binary) << "PNGDATA";

    HttpVisionBackend vision(server.options(), 50);
    VisionRequest req;
    req.prompt = "How many performers?";
    req.frames.push_back(FrameRef{9.0, frame_path.string()});
    CHECK(vision.vision_answer(req) == "two performers");

    auto body = nlohmann::json::parse(server.last_chat_body());
    const auto& content = body["messages"][0]["content"];
    REQUIRE(content.is_array());
    CHECK(content[0]["type"] == "text");
    CHECK(content[1]["type"] == "image_url");
    std::string url = content[1]["image_url"]["url"].get<std::string>();
    CHECK(url.rfind("data:image/png;base64,", 0) == 0);

    // The frame budget applies before any transport.
    VisionRequest over;
    over.prompt = "q";
    for (int i = 0; i < 51; ++i)
        over.frames.push_back(FrameRef{static_cast<double>(i), frame_path.string()});
    CHECK_THROWS_AS(vision.vision_answer(over), FrameBudgetExceeded);
}
