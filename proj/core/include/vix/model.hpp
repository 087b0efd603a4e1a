#pragma once

#include "vix/store.hpp"
#include "vix/time.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

inline constexpr int kFormatVersion = 1;

enum class EntityCategory { character, location, event, other };

std::string_view to_string(EntityCategory c);
/// Unknown category names map to `other`; the upstream model is free text.
EntityCategory entity_category_from_string(std::string_view s);

struct SpeakerTurn {
    std::string speaker; // diarization label, e.g. "SPEAKER_01"
    TimeRange range;
    std::string text;

    friend bool operator==(const SpeakerTurn&, const SpeakerTurn&) = default;
};

struct FrameRef {
    double timestamp_s = 0.0;
    std::string path;

    friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

/// One fixed-length window of the video with everything extracted for it:
/// speakers, transcript turns, visual caption, fused speaker info, the
/// composed text representation, and both embeddings.
struct Segment {
    std::size_t index = 0;
    TimeRange range;
    std::vector<std::string> speakers;     // labels active in this window
    std::vector<SpeakerTurn> transcript;   // every turn intersecting the window
    std::string caption;                   // visual caption
    std::string fused_speaker_info;        // per-label appearance/action cues
    std::string composed_text;             // deterministic composition of the above
    std::vector<float> text_embedding;
    std::vector<float> visual_embedding;
    std::vector<FrameRef> frame_refs;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// One subject extracted from a single segment's composed text.
struct EntityMention {
    std::size_t mention_id = 0; // global ordinal, for partition bookkeeping
    std::size_t segment_index = 0;
    std::string name;
    EntityCategory category = EntityCategory::other;
    std::string description;
    std::vector<float> embedding;

    friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// A consolidated cross-segment identity: unified description, the segments
/// it is linked to, the speaker labels supporting it, and one entity-centric
/// re-caption per linked segment.
struct CanonicalEntity {
    std::size_t id = 0;
    std::string name;
    EntityCategory category = EntityCategory::other;
    std::string global_description;
    std::set<std::size_t> linked_segments;
    std::set<std::string> speaker_labels;
    std::map<std::size_t, std::string> recaptions;
    std::map<std::size_t, std::vector<float>> recaption_embeddings;
    std::vector<std::size_t> member_mentions; // mention ids folded into this entity

    friend bool operator==(const CanonicalEntity&, const CanonicalEntity&) = default;
};

/// A contiguous run of segments with one narrative focus. Spans are inclusive
/// segment ordinals; scenes partition 0..N-1.
struct Scene {
    std::size_t id = 0;
    std::size_t first_segment = 0;
    std::size_t last_segment = 0;
    std::string summary;

    friend bool operator==(const Scene&, const Scene&) = default;
};

/// Per-video source description. Paths are as given (the CLI resolves them
/// relative to the manifest file).
struct SourceManifest {
    std::string video_id;
    double duration_s = 0.0;
    std::string transcript_path; // empty: video without speech
    std::string frames_dir;
    std::string language_tag = "en"; // non-English audio is ingested without turns
    double segment_len_s = 30.0;
    int frames_per_segment = 20;

    friend bool operator==(const SourceManifest&, const SourceManifest&) = default;
};

/// Pipeline knobs captured into every built index.
struct BuildConfig {
    int subsegments_per_segment = 1; // reserved knob; only 1 is implemented
    double cluster_threshold = 0.80;
    int entity_top_k1 = 5;  // stage-1 entity candidates
    int entity_top_k2 = 8;  // stage-2 reranked segments
    int search_k = 5;       // hits per segment search
    int chunk_size = 20;    // segments per scene-detection chunk
    int chunk_overlap = 4;
    int max_steps = 10;     // agent reasoning depth
    int max_frames = 50;    // visual inspection frame cap
    int memory_char_budget = 60000;
    int workers = 4;

    friend bool operator==(const BuildConfig&, const BuildConfig&) = default;
};

/// The persisted index bundle: segment level, canonical entities, scenes, the
/// global summary, and the vector store over all of them.
struct IndexDatabase {
    int format_version = kFormatVersion;
    SourceManifest manifest;
    BuildConfig config;
    std::vector<Segment> segments;
    std::vector<CanonicalEntity> entities;
    std::vector<Scene> scenes;
    std::string global_summary;
    VectorStore store;

    TimeRange scene_range(const Scene& s) const {
        return TimeRange{segments[s.first_segment].range.start_s,
                         segments[s.last_segment].range.end_s};
    }

    friend bool operator==(const IndexDatabase&, const IndexDatabase&) = default;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks every structural invariant of the database: exact segment
/// partition, composed-text determinism, embedding dimensions, entity link
/// and recaption consistency, exact scene cover, and vector-store coverage.
/// Violations are reported, never thrown.
ValidationReport validate_database(const IndexDatabase& db);

/// Record keys in the vector store, zero-padded so lexicographic order is
/// numeric order.
std::string segment_key(std::size_t index);
std::string entity_key(std::size_t id);
std::string recaption_key(std::size_t entity_id, std::size_t segment_index);

} // namespace vix
