#include "support/fixtures.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <unistd.h>

namespace vixtest {

namespace {

std::filesystem::path unique_temp_path() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    return std::filesystem::temp_directory_path() /
           fmt::format("vix-test-{}-{}-{:08x}", ::getpid(), counter.fetch_add(1), rd());
}

} // namespace

TempDir::TempDir() : path_(unique_temp_path()) {
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

vix::SourceManifest write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec) {
    std::filesystem::create_directories(dir / "frames");

    std::ofstream transcript(dir / "transcript.jsonl", std::ios::binary);
    for (const TurnSpec& t : spec.turns) {
        nlohmann::json j{{"start", t.start},
                         {"end", t.end},
                         {"speaker", t.speaker},
                         {"text", t.text},
                         {"language", spec.language}};
        transcript << j.dump() << '\n';
    }
    transcript.close();

    double step = 1.0 / spec.frame_rate_hz;
    for (double t = 0.0; t < spec.duration_s; t += step) {
        std::ofstream frame(dir / "frames" / fmt::format("{:g}.jpg", t), std::ios::binary);
        frame << "frame " << t;
    }

    vix::SourceManifest manifest;
    manifest.video_id = spec.video_id;
    manifest.duration_s = spec.duration_s;
    manifest.transcript_path = (dir / "transcript.jsonl").string();
    manifest.frames_dir = (dir / "frames").string();
    manifest.language_tag = spec.language;
    manifest.segment_len_s = spec.segment_len_s;
    manifest.frames_per_segment = spec.frames_per_segment;
    return manifest;
}

CorpusSpec default_corpus_spec() {
    CorpusSpec spec;
    spec.video_id = "fixture";
    spec.duration_s = 180.0;
    spec.turns = {
        {2.0, 7.0, "S1", "welcome to the show"},
        {25.0, 35.0, "S1", "this sentence spans a segment boundary"},
        {40.0, 55.0, "S2", "hello from the second speaker"},
        {95.0, 100.0, "S1", "checking in again from the host"},
        {150.0, 170.0, "S2", "wrapping up the program for today"},
    };
    return spec;
}

CorpusSpec concert_corpus_spec() {
    CorpusSpec spec;
    spec.video_id = "concert";
    spec.duration_s = 3480.0; // 58 minutes, 116 segments
    spec.turns = {
        {10.0, 20.0, "S1", "good evening and welcome to the concert"},
        {3320.0, 3340.0, "S1", "this next one is called One"},
    };
    return spec;
}

vix::Playbook concert_playbook() {
    vix::Playbook pb;
    // Scene boundaries: a scene break at 20, and one at 110/114 so that scene 2
    // spans segments 110..113 = 00:55:00-00:57:00.
    pb.chat_rules.push_back(
        {fmt::format("Chunk: segments 000016–000035"), R"({"boundaries": [20]})", {}, false});
    pb.chat_rules.push_back({fmt::format("Chunk: segments 000096–000115"),
                             R"({"boundaries": [110, 114]})",
                             {},
                             false});
    // Scene browse over the reasoner.
    pb.chat_rules.push_back(
        {"## task: scene_browse",
         R"({"scene_ids": [2], "storyline": "The second-to-last song, \"One\", is performed from 00:55:00 to 00:57:00."})",
         {},
         false});
    // The three planner steps of the replay.
    pb.chat_rules.push_back(
        {"second-to-last song?\n\nPREVIOUS STEPS:\n(none)",
         std::nullopt,
         vix::ToolCall{"global_scene_browse_tool", {{"query", "second-to-last song"}}},
         true});
    nlohmann::json song_range{
        {"question", "How many performers are on stage?"},
        {"time_ranges", nlohmann::json::array({nlohmann::json::array({"00:55:00", "00:57:00"})})}};
    pb.chat_rules.push_back({"second-to-last song?\n\nPREVIOUS STEPS:\n[step 1]",
                             std::nullopt,
                             vix::ToolCall{"visual_inspect_tool", song_range},
                             true});
    pb.chat_rules.push_back({"[step 2]\ntool: visual_inspect_tool",
                             std::nullopt,
                             vix::ToolCall{"finish", {{"answer", "B"}}},
                             true});
    // Visual inspection of the song.
    pb.vision_rules.push_back(
        {"How many performers", "two singers playing guitar and one playing percussion", {}, false});
    return pb;
}

CorpusSpec random_corpus_spec(std::mt19937& rng) {
    CorpusSpec spec;
    spec.video_id = fmt::format("random-{}", rng());
    std::uniform_real_distribution<double> duration_dist(45.0, 300.0);
    spec.duration_s = std::floor(duration_dist(rng));
    std::uniform_int_distribution<int> speaker_count_dist(1, 3);
    int speakers = speaker_count_dist(rng);
    std::uniform_int_distribution<int> turn_count_dist(0, 12);
    int turns = turn_count_dist(rng);
    const char* words[] = {"river", "market", "engine", "crowd",  "signal",
                           "garden", "bridge", "signal", "evening", "window"};
    std::uniform_int_distribution<int> word_dist(0, 9);
    std::uniform_real_distribution<double> start_dist(0.0, spec.duration_s - 2.0);
    std::uniform_real_distribution<double> len_dist(1.0, 20.0);
    for (int i = 0; i < turns; ++i) {
        TurnSpec t;
        t.start = std::floor(start_dist(rng) * 10.0) / 10.0;
        t.end = std::min(spec.duration_s, t.start + std::floor(len_dist(rng) * 10.0) / 10.0 + 0.5);
        t.speaker = fmt::format("S{}", std::uniform_int_distribution<int>(1, speakers)(rng));
        t.text = fmt::format("{} {} {}", words[word_dist(rng)], words[word_dist(rng)],
                             words[word_dist(rng)]);
        spec.turns.push_back(std::move(t));
    }
    std::sort(spec.turns.begin(), spec.turns.end(),
              [](const TurnSpec& a, const TurnSpec& b) { return a.start < b.start; });
    return spec;
}

vix::BackendSet mock_backends(const vix::Playbook& playbook, std::size_t text_dim,
                              std::size_t visual_dim) {
    vix::BackendSet set;
    set.builder = std::make_shared<vix::MockModelChat>(playbook);
    set.reasoner = std::make_shared<vix::MockModelChat>(playbook);
    set.captioner = std::make_shared<vix::MockVision>(playbook.vision_rules);
    set.inspector = std::make_shared<vix::MockVision>(playbook.vision_rules);
    set.text_embedder = std::make_shared<vix::HashTextEmbedder>(text_dim);
    set.visual_embedder = std::make_shared<vix::HashVisualEmbedder>(visual_dim);
    return set;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(fmt::format("fixture cannot read {}", path.string()));
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool same_file_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    return read_file(a) == read_file(b);
}

bool same_dir_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::set<std::string> names_a;
    std::set<std::string> names_b;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a))
        if (e.is_regular_file())
            names_a.insert(std::filesystem::relative(e.path(), a).string());
    for (const auto& e : std::filesystem::recursive_directory_iterator(b))
        if (e.is_regular_file())
            names_b.insert(std::filesystem::relative(e.path(), b).string());
    if (names_a != names_b)
        return false;
    for (const std::string& name : names_a)
        if (!same_file_bytes(a / name, b / name))
            return false;
    return true;
}

} // namespace vixtest
