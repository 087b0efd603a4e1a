#pragma once

#include "vix/backends.hpp"
#include "vix/mock_backends.hpp"
#include "vix/model.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace vixtest {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct TurnSpec {
    double start = 0.0;
    double end = 0.0;
    std::string speaker;
    std::string text;
};

struct CorpusSpec {
    std::string video_id = "fixture";
    double duration_s = 180.0;
    double segment_len_s = 30.0;
    int frames_per_segment = 20;
    double frame_rate_hz = 1.0;
    std::string language = "en";
    std::vector<TurnSpec> turns;
};

/// Writes transcript.jsonl and a frames/ directory of stub images under
/// `dir`, returning the matching manifest.
vix::SourceManifest write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

/// Three-minute, six-segment corpus with two recurring speakers; one turn
/// straddles the first segment boundary.
CorpusSpec default_corpus_spec();

/// 58-minute concert corpus used by the scripted replay: scenes planted so
/// that scene 2 spans exactly 00:55:00-00:57:00.
CorpusSpec concert_corpus_spec();

/// Scripted behaviors for the concert replay: scene boundaries, scene browse,
/// the three planner steps, and the visual inspection answer.
vix::Playbook concert_playbook();

/// Randomized corpus for property tests (bounded duration, speakers, turns).
CorpusSpec random_corpus_spec(std::mt19937& rng);

/// All-mock backend set; the playbook is copied into each chat/vision role.
vix::BackendSet mock_backends(const vix::Playbook& playbook = {}, std::size_t text_dim = 64,
                              std::size_t visual_dim = 48);

/// Byte compare of two files.
bool same_file_bytes(const std::filesystem::path& a, const std::filesystem::path& b);

/// Byte compare of two directories (same file names, same contents).
bool same_dir_bytes(const std::filesystem::path& a, const std::filesystem::path& b);

std::string read_file(const std::filesystem::path& path);

} // namespace vixtest
