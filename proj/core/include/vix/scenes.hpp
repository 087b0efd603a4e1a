#pragma once

#include "vix/backends.hpp"
#include "vix/model.hpp"
#include "vix/report.hpp"

#include <span>
#include <vector>

namespace vix {

/// One window of consecutive segment texts handed to boundary detection.
/// Covers segments [first_segment, first_segment + texts.size()).
struct CaptionChunk {
    std::size_t first_segment = 0;
    std::vector<std::string> texts;
};

/// Overlapping chunks with stride chunk_size - overlap: every segment appears
/// in at least one chunk and consecutive chunks share exactly `overlap`
/// segments (except possibly the tail). Requires chunk_size > overlap >= 0.
std::vector<CaptionChunk> chunk_captions(std::span<const std::string> captions,
                                         std::size_t chunk_size, std::size_t overlap);

/// Asks the builder model where new scenes start inside one chunk. Out-of-span
/// proposals are dropped with a warning; a refusal degrades to "no internal
/// boundaries" (reported). Returns sorted unique ordinals within the chunk.
std::vector<std::size_t> detect_boundaries(const CaptionChunk& chunk,
                                           std::span<const TimeRange> segment_ranges,
                                           ChatBackend& builder, BuildReport* report);

/// Combines all per-chunk proposals by union, forces segment 0 as a boundary,
/// and turns the gaps between consecutive boundaries into scene spans. The
/// result always partitions 0..segment_count-1. Summaries come back empty.
std::vector<Scene> reconcile_boundaries(const std::vector<std::vector<std::size_t>>& proposals,
                                        std::size_t segment_count);

/// Scene summary from the span's composed texts; falls back to the first
/// segment's caption on refusal (reported).
std::string summarize_scene(const Scene& scene, std::span<const Segment> segments,
                            ChatBackend& builder, BuildReport* report);

/// Video-level summary from the ordered scene summaries; falls back to their
/// truncated concatenation on refusal (reported). Requires at least one scene.
std::string summarize_global(std::span<const Scene> scenes, std::span<const Segment> segments,
                             ChatBackend& builder, BuildReport* report);

/// Chunk -> detect -> reconcile -> summarize, producing the scene level.
std::vector<Scene> build_scene_level(std::span<const Segment> segments, const BuildConfig& config,
                                     ChatBackend& builder, BuildReport& report);

} // namespace vix
