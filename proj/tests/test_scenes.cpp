#include "vix/errors.hpp"
#include "vix/ingest.hpp"
#include "vix/mock_backends.hpp"
#include "vix/scenes.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <fmt/format.h>

#include <random>

using namespace vix;
using namespace vixtest;

namespace {

std::vector<std::string> numbered_captions(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(fmt::format("caption {}", i));
    return out;
}

std::vector<TimeRange> ranges_for(std::size_t first, std::size_t count) {
    std::vector<TimeRange> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(TimeRange{(first + i) * 30.0, (first + i) * 30.0 + 30.0});
    return out;
}

std::vector<Segment> synthetic_segments(std::size_t n) {
    std::vector<Segment> out;
    for (std::size_t i = 0; i < n; ++i) {
        Segment s;
        s.index = i;
        s.range = TimeRange{i * 30.0, i * 30.0 + 30.0};
        s.caption = fmt::format("caption {}", i);
        s.composed_text = fmt::format("CAPTION:\ncaption {}", i);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

TEST_CASE("chunk_captions strides with the configured overlap") {
    auto chunks = chunk_captions(numbered_captions(10), 4, 1);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].first_segment == 0);
    CHECK(chunks[0].texts.size() == 4); // 0..3
    CHECK(chunks[1].first_segment == 3);
    CHECK(chunks[1].texts.size() == 4); // 3..6
    CHECK(chunks[2].first_segment == 6);
    CHECK(chunks[2].texts.size() == 4); // 6..9
}

TEST_CASE("a short caption list yields a single chunk") {
    auto chunks = chunk_captions(numbered_captions(3), 8, 2);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].first_segment == 0);
    CHECK(chunks[0].texts.size() == 3);
}

TEST_CASE("chunking covers every segment with exact overlaps") {
    std::mt19937 rng(47);
    for (int iter = 0; iter < 60; ++iter) {
        std::size_t n = 1 + rng() % 60;
        std::size_t size = 2 + rng() % 12;
        std::size_t overlap = rng() % size;
        auto chunks = chunk_captions(numbered_captions(n), size, overlap);
        std::vector<int> covered(n, 0);
        for (const CaptionChunk& c : chunks)
            for (std::size_t i = 0; i < c.texts.size(); ++i) {
                CHECK(c.texts[i] == fmt::format("caption {}", c.first_segment + i));
                covered[c.first_segment + i] += 1;
            }
        for (std::size_t i = 0; i < n; ++i)
            CHECK(covered[i] >= 1);
        for (std::size_t k = 1; k < chunks.size(); ++k) {
            std::size_t prev_end = chunks[k - 1].first_segment + chunks[k - 1].texts.size();
            bool is_tail = k + 1 == chunks.size();
            std::size_t shared = prev_end - chunks[k].first_segment;
            if (!is_tail)
                CHECK(shared == overlap);
        }
    }
    CHECK_THROWS_AS(chunk_captions(numbered_captions(5), 3, 3), InputError);
    CHECK_THROWS_AS(chunk_captions(numbered_captions(5), 0, 0), InputError);
}

TEST_CASE("detect_boundaries accepts scripted in-span proposals") {
    ScriptedChat chat;
    chat.push_text(R"({"boundaries": [0, 4]})");
    CaptionChunk chunk{0, numbered_captions(8)};
    auto boundaries = detect_boundaries(chunk, ranges_for(0, 8), chat, nullptr);
    CHECK(boundaries == std::vector<std::size_t>{0, 4});
}

TEST_CASE("detect_boundaries drops out-of-span proposals with a warning") {
    ScriptedChat chat;
    chat.push_text(R"({"boundaries": [5, 12, 40]})");
    CaptionChunk chunk{4, numbered_captions(10)}; // spans 4..13
    BuildReport report;
    auto boundaries = detect_boundaries(chunk, ranges_for(4, 10), chat, &report);
    CHECK(boundaries == std::vector<std::size_t>{5, 12});
    CHECK(report.count("boundary_dropped") == 1);
}

TEST_CASE("detect_boundaries degrades to no internal boundaries on refusal") {
    ScriptedChat chat;
    chat.push_text("nope");
    chat.push_text("still nope");
    CaptionChunk chunk{0, numbered_captions(5)};
    BuildReport report;
    CHECK(detect_boundaries(chunk, ranges_for(0, 5), chat, &report).empty());
    CHECK(report.count("boundary_fallback") == 1);
}

TEST_CASE("reconcile_boundaries unions, dedupes, and forces segment zero") {
    auto scenes = reconcile_boundaries({{0, 4}, {4, 7}}, 10);
    REQUIRE(scenes.size() == 3);
    CHECK(scenes[0].first_segment == 0);
    CHECK(scenes[0].last_segment == 3);
    CHECK(scenes[1].first_segment == 4);
    CHECK(scenes[1].last_segment == 6);
    CHECK(scenes[2].first_segment == 7);
    CHECK(scenes[2].last_segment == 9);
    for (std::size_t i = 0; i < scenes.size(); ++i)
        CHECK(scenes[i].id == i);
}

TEST_CASE("no proposals yields one scene spanning the video") {
    auto scenes = reconcile_boundaries({{}}, 5);
    REQUIRE(scenes.size() == 1);
    CHECK(scenes[0].first_segment == 0);
    CHECK(scenes[0].last_segment == 4);
    CHECK(reconcile_boundaries({}, 0).empty());
}

TEST_CASE("reconciled scenes partition the segments for adversarial proposals") {
    std::mt19937 rng(53);
    for (int iter = 0; iter < 200; ++iter) {
        std::size_t n = 1 + rng() % 50;
        std::vector<std::vector<std::size_t>> proposals(1 + rng() % 5);
        for (auto& p : proposals) {
            std::size_t count = rng() % 8;
            for (std::size_t i = 0; i < count; ++i)
                p.push_back(rng() % (n + 10)); // may exceed the segment range
        }
        auto scenes = reconcile_boundaries(proposals, n);
        REQUIRE_FALSE(scenes.empty());
        CHECK(scenes.front().first_segment == 0);
        CHECK(scenes.back().last_segment == n - 1);
        for (std::size_t k = 0; k < scenes.size(); ++k) {
            CHECK(scenes[k].first_segment <= scenes[k].last_segment);
            if (k > 0)
                CHECK(scenes[k].first_segment == scenes[k - 1].last_segment + 1);
        }
    }
}

TEST_CASE("summarize_scene echoes the model and falls back on refusal") {
    auto segments = synthetic_segments(6);
    Scene scene{0, 2, 4, ""};
    ScriptedChat chat;
    chat.push_text("Scene about captions two through four.");
    CHECK(summarize_scene(scene, segments, chat, nullptr) ==
          "Scene about captions two through four.");

    ScriptedChat refusing;
    refusing.push_text("");
    refusing.push_text("");
    BuildReport report;
    CHECK(summarize_scene(scene, segments, refusing, &report) == "caption 2");
    CHECK(report.count("scene_summary_fallback") == 1);

    Scene single{1, 5, 5, ""};
    ScriptedChat one;
    one.push_text("Only the last segment.");
    CHECK(summarize_scene(single, segments, one, nullptr) == "Only the last segment.");
}

TEST_CASE("summarize_global needs a scene and falls back to concatenation") {
    auto segments = synthetic_segments(4);
    std::vector<Scene> scenes{{0, 0, 1, "first half"}, {1, 2, 3, "second half"}};
    ScriptedChat chat;
    chat.push_text("A two-part video.");
    CHECK(summarize_global(scenes, segments, chat, nullptr) == "A two-part video.");

    ScriptedChat refusing;
    refusing.push_text("");
    refusing.push_text("");
    BuildReport report;
    CHECK(summarize_global(scenes, segments, refusing, &report) == "first half second half");
    CHECK(report.count("global_summary_fallback") == 1);

    CHECK_THROWS_AS(summarize_global({}, segments, chat, nullptr), InputError);
}

TEST_CASE("planted boundaries are recovered exactly") {
    // 40 segments; the mock proposes the planted starts within each chunk.
    auto segments = synthetic_segments(40);
    std::vector<std::size_t> planted{0, 7, 19, 33};

    Playbook pb;
    // Chunks at stride 16 (size 20, overlap 4): firsts 0, 16, 32.
    pb.chat_rules.push_back(
        {"Chunk: segments 000000–000019", R"({"boundaries": [7, 19]})", {}, false});
    pb.chat_rules.push_back(
        {"Chunk: segments 000016–000035", R"({"boundaries": [19, 33]})", {}, false});
    pb.chat_rules.push_back(
        {"Chunk: segments 000032–000039", R"({"boundaries": [33]})", {}, false});
    MockModelChat chat(pb);

    BuildConfig config;
    BuildReport report;
    auto scenes = build_scene_level(segments, config, chat, report);
    REQUIRE(scenes.size() == 4);
    CHECK(scenes[0].first_segment == 0);
    CHECK(scenes[0].last_segment == 6);
    CHECK(scenes[1].first_segment == 7);
    CHECK(scenes[1].last_segment == 18);
    CHECK(scenes[2].first_segment == 19);
    CHECK(scenes[2].last_segment == 32);
    CHECK(scenes[3].first_segment == 33);
    CHECK(scenes[3].last_segment == 39);
    for (const Scene& s : scenes)
        CHECK_FALSE(s.summary.empty());
}

TEST_CASE("build_scene_level is deterministic under the mock") {
    auto segments = synthetic_segments(25);
    BuildConfig config;
    config.workers = 4;
    MockModelChat chat;
    BuildReport r1;
    auto first = build_scene_level(segments, config, chat, r1);
    BuildConfig serial = config;
    serial.workers = 1;
    BuildReport r2;
    auto second = build_scene_level(segments, serial, chat, r2);
    CHECK(first == second);
    CHECK(r1.to_jsonl() == r2.to_jsonl());
}
