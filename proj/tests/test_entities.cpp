#include "vix/entities.hpp"
#include "vix/ingest.hpp"
#include "vix/errors.hpp"
#include "vix/mock_backends.hpp"
#include "vix/prompts.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <fmt/format.h>

#include <random>

using namespace vix;
using namespace vixtest;

namespace {

/// Ad-hoc scripted backend driven by a callable.
class LambdaChat final : public ChatBackend {
public:
    explicit LambdaChat(std::function<ChatResponse(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
    ChatResponse chat(const ChatRequest& req) override { return fn_(req); }

private:
    std::function<ChatResponse(const ChatRequest&)> fn_;
};

EntityMention mention(std::size_t id, std::size_t segment, std::string name, EntityCategory cat,
                      std::string description, std::vector<float> embedding = {}) {
    EntityMention m;
    m.mention_id = id;
    m.segment_index = segment;
    m.name = std::move(name);
    m.category = cat;
    m.description = std::move(description);
    m.embedding = std::move(embedding);
    return m;
}

Segment minimal_segment(std::size_t index, std::string composed,
                        std::vector<std::string> speakers = {}) {
    Segment s;
    s.index = index;
    s.range = TimeRange{index * 30.0, index * 30.0 + 30.0};
    s.composed_text = std::move(composed);
    s.speakers = std::move(speakers);
    return s;
}

std::vector<EntityMention> random_mentions(std::mt19937& rng, std::size_t count,
                                           std::size_t dim) {
    HashTextEmbedder embedder(dim, 0x5458);
    const char* words[] = {"host",   "singer", "stage",  "market", "river",
                           "street", "crowd",  "studio", "garden", "tower"};
    std::vector<EntityMention> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::string desc = fmt::format("{} {} {}", words[rng() % 10], words[rng() % 10],
                                       words[rng() % 10]);
        auto m = mention(i, rng() % 8, fmt::format("m{}", i), EntityCategory::character, desc);
        m.embedding = embedder.embed_text(m.description);
        out.push_back(std::move(m));
    }
    return out;
}

CanonicalEntity entity_with_labels(std::size_t id, EntityCategory cat,
                                   std::set<std::string> labels,
                                   std::set<std::size_t> linked) {
    CanonicalEntity e;
    e.id = id;
    e.name = fmt::format("entity {}", id);
    e.category = cat;
    e.global_description = fmt::format("description {}", id);
    e.speaker_labels = std::move(labels);
    e.linked_segments = std::move(linked);
    return e;
}

} // namespace

TEST_CASE("extract_entities parses a scripted two-entity reply") {
    ScriptedChat chat;
    chat.push_text(R"({"entities": [
        {"name": "the host", "category": "character", "description": "a host on stage"},
        {"name": "the plaza", "category": "location", "description": "an open plaza"}]})");
    Segment seg = minimal_segment(4, "CAPTION:\nA host on a plaza.");
    auto mentions = extract_entities(seg, chat);
    REQUIRE(mentions.size() == 2);
    CHECK(mentions[0].segment_index == 4);
    CHECK(mentions[0].category == EntityCategory::character);
    CHECK(mentions[1].category == EntityCategory::location);
}

TEST_CASE("extract_entities returns empty for empty composed text without a call") {
    ScriptedChat chat; // empty queue: any call would throw
    Segment seg = minimal_segment(0, "");
    CHECK(extract_entities(seg, chat).empty());
}

TEST_CASE("extract_entities re-prompts once then refuses") {
    ScriptedChat chat;
    chat.push_text("not json");
    chat.push_text("still not json");
    Segment seg = minimal_segment(0, "CAPTION:\nsomething");
    CHECK_THROWS_AS(extract_entities(seg, chat), BackendRefusal);
    CHECK(chat.requests().size() == 2);

    ScriptedChat recovers;
    recovers.push_text("garbage");
    recovers.push_text(R"({"entities": []})");
    CHECK(extract_entities(seg, recovers).empty());
}

TEST_CASE("default mock extraction yields character mentions for speakers") {
    BackendSet backends = mock_backends();
    Segment seg = minimal_segment(2, "CAPTION:\nA host speaks.", {"S1"});
    auto mentions = extract_entities(seg, *backends.builder);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].category == EntityCategory::character);
    CHECK(mentions[0].name == "S1");
}

TEST_CASE("two identical descriptions cluster together") {
    HashTextEmbedder embedder(64);
    auto a = mention(0, 0, "a", EntityCategory::character, "the same description");
    auto b = mention(1, 3, "b", EntityCategory::character, "the same description");
    a.embedding = embedder.embed_text(a.description);
    b.embedding = embedder.embed_text(b.description);
    auto clusters = cluster_mentions({a, b}, 0.99);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].members.size() == 2);
}

TEST_CASE("orthogonal embeddings stay separate at threshold 0.5") {
    auto a = mention(0, 0, "a", EntityCategory::character, "x", {1.0f, 0.0f});
    auto b = mention(1, 1, "b", EntityCategory::character, "y", {0.0f, 1.0f});
    auto clusters = cluster_mentions({a, b}, 0.5);
    CHECK(clusters.size() == 2);
}

TEST_CASE("cluster centroid is the normalized member mean") {
    auto a = mention(0, 0, "a", EntityCategory::character, "x", {1.0f, 0.0f});
    auto b = mention(1, 1, "b", EntityCategory::character, "y", {0.0f, 1.0f});
    auto clusters = cluster_mentions({a, b}, -1.0); // force a merge
    REQUIRE(clusters.size() == 1);
    const auto& c = clusters[0].centroid;
    REQUIRE(c.size() == 2);
    CHECK(c[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(c[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("clustering matches the exhaustive reference implementation") {
    std::mt19937 rng(37);
    for (int iter = 0; iter < 30; ++iter) {
        std::size_t n = 2 + rng() % 29;
        auto mentions = random_mentions(rng, n, 32);
        double threshold = 0.3 + 0.6 * (static_cast<double>(rng() % 100) / 100.0);
        auto ours = partition_of(cluster_mentions(mentions, threshold));
        auto reference = reference_agglomerative(mentions, threshold);
        CHECK(ours == reference);
    }
}

TEST_CASE("raising the threshold never decreases the cluster count") {
    std::mt19937 rng(41);
    for (int iter = 0; iter < 10; ++iter) {
        auto mentions = random_mentions(rng, 24, 32);
        std::size_t previous = 0;
        for (double threshold : {0.2, 0.4, 0.6, 0.8, 0.95}) {
            std::size_t count = cluster_mentions(mentions, threshold).size();
            CHECK(count >= previous);
            previous = count;
        }
    }
}

TEST_CASE("cluster_mentions requires embedded mentions") {
    auto a = mention(0, 0, "a", EntityCategory::character, "x");
    CHECK_THROWS_AS(cluster_mentions({a}, 0.5), InputError);
}

TEST_CASE("canonicalize keeps a singleton cluster intact") {
    auto m = mention(7, 2, "the host", EntityCategory::character, "a host with a microphone",
                     {1.0f, 0.0f});
    EntityCluster cluster{{m}, m.embedding, {}};
    std::vector<Segment> segments(4);
    for (std::size_t i = 0; i < 4; ++i)
        segments[i] = minimal_segment(i, "text", i == 2 ? std::vector<std::string>{"S1"}
                                                        : std::vector<std::string>{});
    BackendSet backends = mock_backends();
    auto entities = canonicalize_cluster(cluster, segments, *backends.builder, nullptr);
    REQUIRE(entities.size() == 1);
    CHECK(entities[0].global_description == "a host with a microphone");
    CHECK(entities[0].linked_segments == std::set<std::size_t>{2});
    CHECK(entities[0].speaker_labels == std::set<std::string>{"S1"});
    CHECK(entities[0].member_mentions == std::vector<std::size_t>{7});
}

TEST_CASE("canonicalize honors a scripted split into subgroups") {
    auto a = mention(0, 0, "tall twin", EntityCategory::character, "a tall twin", {1.0f, 0.0f});
    auto b = mention(1, 4, "short twin", EntityCategory::character, "a short twin", {1.0f, 0.0f});
    EntityCluster cluster{{a, b}, a.embedding, {}};
    std::vector<Segment> segments(6);
    for (std::size_t i = 0; i < 6; ++i)
        segments[i] = minimal_segment(i, "text");

    ScriptedChat chat;
    chat.push_text(R"({"groups": [
        {"name": "tall twin", "description": "the taller of the twins", "members": [0]},
        {"name": "short twin", "description": "the shorter of the twins", "members": [1]}]})");
    auto entities = canonicalize_cluster(cluster, segments, chat, nullptr);
    REQUIRE(entities.size() == 2);
    CHECK(entities[0].member_mentions == std::vector<std::size_t>{0});
    CHECK(entities[1].member_mentions == std::vector<std::size_t>{1});
    CHECK(entities[0].linked_segments == std::set<std::size_t>{0});
    CHECK(entities[1].linked_segments == std::set<std::size_t>{4});
}

TEST_CASE("visually similar but distinct characters stay split when the model says so") {
    // The over-merge risk case: one cluster, two identities.
    auto a = mention(0, 1, "woman in blue", EntityCategory::character,
                     "a woman in a blue coat", {1.0f, 0.0f});
    auto b = mention(1, 2, "her double", EntityCategory::character,
                     "a lookalike in a blue coat", {1.0f, 0.0f});
    EntityCluster cluster{{a, b}, a.embedding, {}};
    std::vector<Segment> segments(3);
    for (std::size_t i = 0; i < 3; ++i)
        segments[i] = minimal_segment(i, "text");
    ScriptedChat chat;
    chat.push_text(R"({"groups": [
        {"name": "woman in blue", "description": "the original", "members": [0]},
        {"name": "her double", "description": "the lookalike", "members": [1]}]})");
    auto entities = canonicalize_cluster(cluster, segments, chat, nullptr);
    CHECK(entities.size() == 2);
}

TEST_CASE("canonicalize falls back to one concatenated entity on refusal") {
    auto a = mention(0, 0, "first", EntityCategory::event, "an opening number", {1.0f, 0.0f});
    auto b = mention(1, 1, "second", EntityCategory::event, "a second number", {1.0f, 0.0f});
    EntityCluster cluster{{a, b}, a.embedding, {}};
    std::vector<Segment> segments(2);
    for (std::size_t i = 0; i < 2; ++i)
        segments[i] = minimal_segment(i, "text");
    ScriptedChat chat;
    chat.push_text("no");
    chat.push_text("still no");
    BuildReport report;
    auto entities = canonicalize_cluster(cluster, segments, chat, &report);
    REQUIRE(entities.size() == 1);
    CHECK(entities[0].name == "first");
    CHECK(entities[0].global_description == "an opening number; a second number");
    CHECK(entities[0].member_mentions == std::vector<std::size_t>{0, 1});
    REQUIRE(report.records().size() == 1);
    CHECK(report.records()[0]["fallback"] == true);
}

TEST_CASE("a mis-partitioned canonicalization reply counts as a refusal") {
    auto a = mention(0, 0, "x", EntityCategory::character, "x", {1.0f, 0.0f});
    auto b = mention(1, 1, "y", EntityCategory::character, "y", {1.0f, 0.0f});
    EntityCluster cluster{{a, b}, a.embedding, {}};
    std::vector<Segment> segments(2);
    for (std::size_t i = 0; i < 2; ++i)
        segments[i] = minimal_segment(i, "text");
    ScriptedChat chat;
    chat.push_text(R"({"groups": [{"name": "x", "description": "d", "members": [0]}]})"); // member 1 missing
    chat.push_text(R"({"groups": [{"name": "x", "description": "d", "members": [0, 0, 1]}]})"); // duplicate
    auto entities = canonicalize_cluster(cluster, segments, chat, nullptr);
    REQUIRE(entities.size() == 1); // fallback path
    CHECK(entities[0].member_mentions == std::vector<std::size_t>{0, 1});
}

TEST_CASE("speaker merge unifies characters sharing a label") {
    auto a = entity_with_labels(0, EntityCategory::character, {"S1"}, {0, 1});
    auto b = entity_with_labels(1, EntityCategory::character, {"S1"}, {4});
    auto merged = speaker_priority_merge({a, b}, nullptr, nullptr);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].linked_segments == std::set<std::size_t>{0, 1, 4});
    CHECK(merged[0].global_description == "description 0; description 1");
}

TEST_CASE("speaker merge leaves disjoint labels and non-characters alone") {
    auto a = entity_with_labels(0, EntityCategory::character, {"S1"}, {0});
    auto b = entity_with_labels(1, EntityCategory::character, {"S2"}, {1});
    auto c = entity_with_labels(2, EntityCategory::location, {"S1"}, {2});
    auto d = entity_with_labels(3, EntityCategory::location, {"S1"}, {3});
    auto merged = speaker_priority_merge({a, b, c, d}, nullptr, nullptr);
    CHECK(merged.size() == 4);
}

TEST_CASE("speaker merge closes transitively") {
    auto a = entity_with_labels(0, EntityCategory::character, {"S1"}, {0});
    auto b = entity_with_labels(1, EntityCategory::character, {"S1", "S2"}, {1});
    auto c = entity_with_labels(2, EntityCategory::character, {"S2"}, {2});
    auto merged = speaker_priority_merge({a, b, c}, nullptr, nullptr);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].linked_segments == std::set<std::size_t>{0, 1, 2});
    CHECK(merged[0].speaker_labels == std::set<std::string>{"S1", "S2"});
}

TEST_CASE("speaker merge agrees with the union-find oracle on random instances") {
    std::mt19937 rng(43);
    for (int iter = 0; iter < 40; ++iter) {
        std::vector<CanonicalEntity> entities;
        std::size_t n = 2 + rng() % 10;
        for (std::size_t i = 0; i < n; ++i) {
            std::set<std::string> labels;
            std::size_t label_count = rng() % 3;
            for (std::size_t l = 0; l < label_count; ++l)
                labels.insert(fmt::format("S{}", rng() % 4));
            EntityCategory cat =
                (rng() % 4 == 0) ? EntityCategory::location : EntityCategory::character;
            entities.push_back(entity_with_labels(i, cat, labels, {i}));
        }
        auto components = reference_speaker_components(entities);
        auto merged = speaker_priority_merge(entities, nullptr, nullptr);
        CHECK(merged.size() == components.size());

        // Each merged entity's linked set must equal the union over one component.
        std::vector<std::set<std::size_t>> merged_links;
        for (const CanonicalEntity& e : merged)
            merged_links.push_back(e.linked_segments);
        std::sort(merged_links.begin(), merged_links.end());
        std::vector<std::set<std::size_t>> expected_links;
        for (const auto& comp : components) {
            std::set<std::size_t> links;
            for (std::size_t idx : comp)
                links.insert(idx); // linked_segments == {index} by construction
            expected_links.push_back(std::move(links));
        }
        std::sort(expected_links.begin(), expected_links.end());
        CHECK(merged_links == expected_links);

        // After merging, no two character entities share a label.
        for (std::size_t i = 0; i < merged.size(); ++i)
            for (std::size_t j = i + 1; j < merged.size(); ++j) {
                if (merged[i].category != EntityCategory::character ||
                    merged[j].category != EntityCategory::character)
                    continue;
                for (const std::string& label : merged[i].speaker_labels)
                    CHECK_FALSE(merged[j].speaker_labels.contains(label));
            }
    }
}

TEST_CASE("speaker merge asks the builder for one unified description") {
    auto a = entity_with_labels(0, EntityCategory::character, {"S1"}, {0});
    auto b = entity_with_labels(1, EntityCategory::character, {"S1"}, {1});
    ScriptedChat chat;
    chat.push_text("One person seen indoors and outdoors.");
    auto merged = speaker_priority_merge({a, b}, &chat, nullptr);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].global_description == "One person seen indoors and outdoors.");
}

TEST_CASE("recaption echoes a scripted builder and validates linkage") {
    CanonicalEntity e = entity_with_labels(0, EntityCategory::character, {"S1"}, {3});
    Segment seg = minimal_segment(3, "CAPTION:\nA stage.");
    ScriptedChat chat;
    chat.push_text("The host adjusts the microphone.");
    CHECK(recaption_entity_segment(e, seg, chat, nullptr) == "The host adjusts the microphone.");

    Segment unlinked = minimal_segment(4, "x");
    CHECK_THROWS_AS(recaption_entity_segment(e, unlinked, chat, nullptr), InputError);
}

TEST_CASE("recaption falls back to the composed text on refusal") {
    CanonicalEntity e = entity_with_labels(0, EntityCategory::character, {"S1"}, {3});
    Segment seg = minimal_segment(3, "CAPTION:\nA stage.");
    ScriptedChat chat;
    chat.push_text(""); // blank counts as a refusal
    chat.push_text("");
    BuildReport report;
    CHECK(recaption_entity_segment(e, seg, chat, &report) == "CAPTION:\nA stage.");
    CHECK(report.count("recaption_fallback") == 1);
}

TEST_CASE("build_entity_database merges a recurring character across outfit changes") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildConfig config;
    auto segments = build_segments(manifest, config, backends);

    // Planted extraction: the same person described differently in segments 1
    // and 3 (different outfits, same voice S1); embeddings stay apart, the
    // shared label merges them.
    backends.builder = std::make_shared<LambdaChat>([&](const ChatRequest& req) -> ChatResponse {
        std::string task = prompts::request_task(req).value_or("");
        if (task == "entity_extraction") {
            const std::string& user = req.messages.back().content;
            if (user.find("Window: 00:00:30–00:01:00") != std::string::npos)
                return {R"({"entities": [{"name": "performer in red", "category": "character",
                         "description": "performer wearing a red dress on the main stage"}]})",
                        std::nullopt};
            if (user.find("Window: 00:01:30–00:02:00") != std::string::npos)
                return {R"({"entities": [{"name": "performer in yellow", "category": "character",
                         "description": "performer wearing a yellow outfit backstage"}]})",
                        std::nullopt};
            return {R"({"entities": []})", std::nullopt};
        }
        if (task == "entity_canonicalization")
            return MockModelChat{}.chat(req);
        if (task == "entity_merge")
            return {"One performer who changes outfits.", std::nullopt};
        if (task == "entity_recaption")
            return MockModelChat{}.chat(req);
        return {"OK", std::nullopt};
    });

    BuildReport report;
    auto entities = build_entity_database(segments, backends, config, report);
    REQUIRE(entities.size() == 1);
    CHECK(entities[0].category == EntityCategory::character);
    CHECK(entities[0].linked_segments == std::set<std::size_t>{1, 3});
    CHECK(entities[0].global_description == "One performer who changes outfits.");
    CHECK(entities[0].recaptions.size() == 2);
    CHECK(report.count("speaker_merge") == 1);
}

TEST_CASE("build_entity_database on a speechless corpus yields no entities") {
    TempDir dir;
    CorpusSpec spec = default_corpus_spec();
    spec.turns.clear();
    SourceManifest manifest = write_corpus(dir.path(), spec);
    BackendSet backends = mock_backends();
    BuildConfig config;
    auto segments = build_segments(manifest, config, backends);
    BuildReport report;
    auto entities = build_entity_database(segments, backends, config, report);
    CHECK(entities.empty());
}

TEST_CASE("build_entity_database is deterministic across runs and worker counts") {
    TempDir dir;
    SourceManifest manifest = write_corpus(dir.path(), default_corpus_spec());
    BackendSet backends = mock_backends();
    BuildConfig config;
    config.workers = 4;
    auto segments = build_segments(manifest, config, backends);

    BuildReport r1;
    auto first = build_entity_database(segments, backends, config, r1);
    BuildConfig serial = config;
    serial.workers = 1;
    BuildReport r2;
    auto second = build_entity_database(segments, backends, serial, r2);
    CHECK(first == second);
    CHECK(r1.to_jsonl() == r2.to_jsonl());

    // Mention partition and link correctness over the result.
    std::set<std::size_t> seen;
    for (const CanonicalEntity& e : first) {
        std::set<std::size_t> member_segments;
        for (std::size_t id : e.member_mentions)
            CHECK(seen.insert(id).second); // no mention lands twice
        CHECK(e.recaptions.size() == e.linked_segments.size());
        CHECK(e.recaption_embeddings.size() == e.linked_segments.size());
    }
}
