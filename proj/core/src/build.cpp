#include "vix/build.hpp"

#include "vix/entities.hpp"
#include "vix/errors.hpp"
#include "vix/ingest.hpp"
#include "vix/scenes.hpp"

#include <fmt/format.h>

namespace vix {

namespace {

void fill_store(IndexDatabase& db, const BackendSet& backends) {
    for (const Segment& seg : db.segments) {
        db.store.insert(VectorRecord{{VectorKind::segment_text, segment_key(seg.index)},
                                     seg.text_embedding,
                                     {seg.range},
                                     seg.composed_text});
        db.store.insert(VectorRecord{{VectorKind::segment_visual, segment_key(seg.index)},
                                     seg.visual_embedding,
                                     {seg.range},
                                     seg.caption});
    }
    for (const CanonicalEntity& e : db.entities) {
        std::vector<TimeRange> spans;
        for (std::size_t seg : e.linked_segments)
            spans.push_back(db.segments[seg].range);
        db.store.insert(VectorRecord{{VectorKind::entity_global, entity_key(e.id)},
                                     backends.text_embedder->embed_text(e.global_description),
                                     std::move(spans),
                                     fmt::format("{}: {}", e.name, e.global_description)});
        for (const auto& [seg, vec] : e.recaption_embeddings)
            db.store.insert(VectorRecord{{VectorKind::entity_recaption, recaption_key(e.id, seg)},
                                         vec,
                                         {db.segments[seg].range},
                                         e.recaptions.at(seg)});
    }
}

} // namespace

IndexDatabase build_index(const SourceManifest& manifest, const BuildConfig& config,
                          const BackendSet& backends, BuildReport& report) {
    IndexDatabase db;
    db.manifest = manifest;
    db.config = config;
    db.format_version = kFormatVersion;

    db.segments = build_segments(manifest, config, backends);
    report.add({{"phase", "segments"}, {"count", db.segments.size()}});

    db.entities = build_entity_database(db.segments, backends, config, report);
    db.scenes = build_scene_level(db.segments, config, *backends.builder, report);
    db.global_summary = summarize_global(db.scenes, db.segments, *backends.builder, &report);

    fill_store(db, backends);
    report.add({{"phase", "store"}, {"records", db.store.size()}});
    return db;
}

} // namespace vix
