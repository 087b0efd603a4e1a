#include "vix/model.hpp"

#include "vix/ingest.hpp"

#include <fmt/format.h>

#include <cmath>

namespace vix {

std::string_view to_string(EntityCategory c) {
    switch (c) {
    case EntityCategory::character: return "character";
    case EntityCategory::location: return "location";
    case EntityCategory::event: return "event";
    case EntityCategory::other: return "other";
    }
    return "other";
}

EntityCategory entity_category_from_string(std::string_view s) {
    if (s == "character") return EntityCategory::character;
    if (s == "location") return EntityCategory::location;
    if (s == "event") return EntityCategory::event;
    return EntityCategory::other;
}

std::string segment_key(std::size_t index) {
    return fmt::format("{:06}", index);
}

std::string entity_key(std::size_t id) {
    return fmt::format("{:06}", id);
}

std::string recaption_key(std::size_t entity_id, std::size_t segment_index) {
    return fmt::format("{:06}:{:06}", entity_id, segment_index);
}

namespace {

void check_segments(const IndexDatabase& db, std::vector<std::string>& out) {
    const double seg_len = db.manifest.segment_len_s;
    const double duration = db.manifest.duration_s;
    if (duration > 0 && seg_len > 0) {
        auto expected = static_cast<std::size_t>(std::ceil(duration / seg_len));
        if (db.segments.size() != expected)
            out.push_back(fmt::format("expected {} segments for duration {} at {} s, found {}",
                                      expected, duration, seg_len, db.segments.size()));
    }
    std::size_t text_dim = 0;
    std::size_t visual_dim = 0;
    for (std::size_t i = 0; i < db.segments.size(); ++i) {
        const Segment& seg = db.segments[i];
        if (seg.index != i)
            out.push_back(fmt::format("segment at position {} carries index {}", i, seg.index));
        if (!seg.range.valid())
            out.push_back(fmt::format("segment {} has invalid range", i));
        double want_start = static_cast<double>(i) * seg_len;
        double want_end = std::min(want_start + seg_len, duration);
        if (seg.range.start_s != want_start || seg.range.end_s != want_end)
            out.push_back(fmt::format("segment {} range [{}, {}) != expected [{}, {})", i,
                                      seg.range.start_s, seg.range.end_s, want_start, want_end));
        std::string recomposed =
            compose_segment_text(seg.fused_speaker_info, seg.transcript, seg.caption);
        if (seg.composed_text != recomposed)
            out.push_back(fmt::format("segment {} composed text diverges from composition", i));
        for (std::size_t t = 1; t < seg.transcript.size(); ++t)
            if (seg.transcript[t].range.start_s < seg.transcript[t - 1].range.start_s)
                out.push_back(fmt::format("segment {} transcript not ordered at turn {}", i, t));
        if (seg.text_embedding.empty())
            out.push_back(fmt::format("segment {} missing text embedding", i));
        else if (text_dim == 0)
            text_dim = seg.text_embedding.size();
        else if (seg.text_embedding.size() != text_dim)
            out.push_back(fmt::format("segment {} text embedding dim {} != {}", i,
                                      seg.text_embedding.size(), text_dim));
        if (seg.visual_embedding.empty())
            out.push_back(fmt::format("segment {} missing visual embedding", i));
        else if (visual_dim == 0)
            visual_dim = seg.visual_embedding.size();
        else if (seg.visual_embedding.size() != visual_dim)
            out.push_back(fmt::format("segment {} visual embedding dim {} != {}", i,
                                      seg.visual_embedding.size(), visual_dim));
    }
}

void check_entities(const IndexDatabase& db, std::vector<std::string>& out) {
    const std::size_t n = db.segments.size();
    for (const CanonicalEntity& e : db.entities) {
        if (e.global_description.empty())
            out.push_back(fmt::format("entity {} has empty description", e.id));
        if (e.linked_segments.empty())
            out.push_back(fmt::format("entity {} links no segments", e.id));
        for (std::size_t seg : e.linked_segments)
            if (seg >= n)
                out.push_back(fmt::format("entity {} links missing segment {}", e.id, seg));
        for (const auto& [seg, text] : e.recaptions) {
            if (!e.linked_segments.contains(seg))
                out.push_back(
                    fmt::format("entity {} recaption for segment {} not in linked set", e.id, seg));
            if (text.empty())
                out.push_back(fmt::format("entity {} has empty recaption for segment {}", e.id, seg));
        }
        for (std::size_t seg : e.linked_segments)
            if (!e.recaptions.contains(seg))
                out.push_back(fmt::format("entity {} missing recaption for segment {}", e.id, seg));
        for (const auto& [seg, vec] : e.recaption_embeddings)
            if (!e.recaptions.contains(seg))
                out.push_back(fmt::format(
                    "entity {} has recaption embedding without text for segment {}", e.id, seg));
        for (const auto& [seg, text] : e.recaptions)
            if (!e.recaption_embeddings.contains(seg))
                out.push_back(
                    fmt::format("entity {} recaption for segment {} not embedded", e.id, seg));
    }
}

void check_scenes(const IndexDatabase& db, std::vector<std::string>& out) {
    const std::size_t n = db.segments.size();
    if (n == 0)
        return;
    std::size_t next = 0;
    for (const Scene& s : db.scenes) {
        if (s.first_segment > s.last_segment) {
            out.push_back(fmt::format("scene {} span inverted", s.id));
            continue;
        }
        if (s.first_segment > next) {
            out.push_back(fmt::format("scene gap at {}", next));
            next = s.first_segment;
        } else if (s.first_segment < next) {
            out.push_back(fmt::format("scene overlap at {}", s.first_segment));
        }
        if (s.summary.empty())
            out.push_back(fmt::format("scene {} has empty summary", s.id));
        next = s.last_segment + 1;
    }
    if (next < n)
        out.push_back(fmt::format("scene gap at {}", next));
    if (next > n)
        out.push_back(fmt::format("scene span exceeds segment count {}", n));
    if (db.global_summary.empty())
        out.push_back("global summary is empty");
}

void check_store(const IndexDatabase& db, std::vector<std::string>& out) {
    for (const Segment& seg : db.segments) {
        if (db.store.find(VectorKind::segment_text, segment_key(seg.index)) == nullptr)
            out.push_back(fmt::format("store missing segment_text record {}", seg.index));
        if (db.store.find(VectorKind::segment_visual, segment_key(seg.index)) == nullptr)
            out.push_back(fmt::format("store missing segment_visual record {}", seg.index));
    }
    for (const CanonicalEntity& e : db.entities) {
        if (db.store.find(VectorKind::entity_global, entity_key(e.id)) == nullptr)
            out.push_back(fmt::format("store missing entity_global record {}", e.id));
        for (const auto& [seg, text] : e.recaptions)
            if (db.store.find(VectorKind::entity_recaption, recaption_key(e.id, seg)) == nullptr)
                out.push_back(
                    fmt::format("store missing entity_recaption record {}:{}", e.id, seg));
    }
}

} // namespace

ValidationReport validate_database(const IndexDatabase& db) {
    ValidationReport report;
    if (db.format_version != kFormatVersion)
        report.violations.push_back(
            fmt::format("format version {} != {}", db.format_version, kFormatVersion));
    check_segments(db, report.violations);
    check_entities(db, report.violations);
    check_scenes(db, report.violations);
    check_store(db, report.violations);
    return report;
}

} // namespace vix
