#include "vix/scenes.hpp"

#include "vix/errors.hpp"
#include "vix/parallel.hpp"
#include "vix/prompts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace vix {

namespace {

constexpr std::size_t kGlobalFallbackBudget = 4000;

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

} // namespace

std::vector<CaptionChunk> chunk_captions(std::span<const std::string> captions,
                                         std::size_t chunk_size, std::size_t overlap) {
    if (chunk_size == 0 || chunk_size <= overlap)
        throw InputError("chunk_captions requires chunk_size > overlap >= 0");
    std::vector<CaptionChunk> out;
    if (captions.empty())
        return out;
    const std::size_t stride = chunk_size - overlap;
    for (std::size_t first = 0;; first += stride) {
        std::size_t last = std::min(first + chunk_size, captions.size());
        CaptionChunk chunk;
        chunk.first_segment = first;
        chunk.texts.assign(captions.begin() + static_cast<std::ptrdiff_t>(first),
                           captions.begin() + static_cast<std::ptrdiff_t>(last));
        out.push_back(std::move(chunk));
        if (last == captions.size())
            break;
    }
    return out;
}

std::vector<std::size_t> detect_boundaries(const CaptionChunk& chunk,
                                           std::span<const TimeRange> segment_ranges,
                                           ChatBackend& builder, BuildReport* report) {
    if (chunk.texts.empty())
        throw InputError("detect_boundaries over an empty chunk");
    std::vector<std::size_t> proposals;
    try {
        proposals = prompts::chat_parsed(
            builder, prompts::boundary_request(chunk.first_segment, chunk.texts, segment_ranges),
            [](std::string_view text) { return prompts::parse_boundaries_reply(text); });
    } catch (const BackendRefusal&) {
        if (report != nullptr)
            report->add({{"phase", "boundary_fallback"}, {"chunk_first", chunk.first_segment}});
        return {};
    }

    const std::size_t lo = chunk.first_segment;
    const std::size_t hi = chunk.first_segment + chunk.texts.size();
    std::vector<std::size_t> accepted;
    for (std::size_t b : proposals) {
        if (b < lo || b >= hi) {
            if (report != nullptr)
                report->add({{"phase", "boundary_dropped"},
                             {"chunk_first", chunk.first_segment},
                             {"proposal", b}});
            continue;
        }
        accepted.push_back(b);
    }
    std::sort(accepted.begin(), accepted.end());
    accepted.erase(std::unique(accepted.begin(), accepted.end()), accepted.end());
    return accepted;
}

std::vector<Scene> reconcile_boundaries(const std::vector<std::vector<std::size_t>>& proposals,
                                        std::size_t segment_count) {
    std::vector<Scene> out;
    if (segment_count == 0)
        return out;
    std::set<std::size_t> boundaries{0};
    for (const auto& chunk_proposals : proposals)
        for (std::size_t b : chunk_proposals)
            if (b < segment_count)
                boundaries.insert(b);

    std::vector<std::size_t> sorted(boundaries.begin(), boundaries.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        Scene scene;
        scene.id = k;
        scene.first_segment = sorted[k];
        scene.last_segment = (k + 1 < sorted.size() ? sorted[k + 1] : segment_count) - 1;
        out.push_back(std::move(scene));
    }
    return out;
}

std::string summarize_scene(const Scene& scene, std::span<const Segment> segments,
                            ChatBackend& builder, BuildReport* report) {
    if (scene.last_segment >= segments.size() || scene.first_segment > scene.last_segment)
        throw InputError(fmt::format("scene {} span is invalid", scene.id));
    std::vector<std::string> texts;
    for (std::size_t i = scene.first_segment; i <= scene.last_segment; ++i)
        texts.push_back(segments[i].composed_text);
    TimeRange span{segments[scene.first_segment].range.start_s,
                   segments[scene.last_segment].range.end_s};
    try {
        return prompts::chat_parsed(
            builder,
            prompts::scene_summary_request(scene.first_segment, scene.last_segment, span, texts),
            [](std::string_view reply) {
                if (is_blank(reply))
                    throw BackendRefusal("empty scene summary");
                return std::string(reply);
            });
    } catch (const BackendRefusal&) {
        if (report != nullptr)
            report->add({{"phase", "scene_summary_fallback"}, {"scene", scene.id}});
        return segments[scene.first_segment].caption;
    }
}

std::string summarize_global(std::span<const Scene> scenes, std::span<const Segment> segments,
                             ChatBackend& builder, BuildReport* report) {
    if (scenes.empty())
        throw InputError("summarize_global requires at least one scene");
    std::vector<TimeRange> spans;
    for (const Scene& s : scenes)
        spans.push_back(TimeRange{segments[s.first_segment].range.start_s,
                                  segments[s.last_segment].range.end_s});
    try {
        return prompts::chat_parsed(builder, prompts::global_summary_request(scenes, spans),
                                    [](std::string_view reply) {
                                        if (is_blank(reply))
                                            throw BackendRefusal("empty global summary");
                                        return std::string(reply);
                                    });
    } catch (const BackendRefusal&) {
        if (report != nullptr)
            report->add({{"phase", "global_summary_fallback"}});
        std::string fallback;
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            if (i > 0)
                fallback += ' ';
            fallback += scenes[i].summary;
            if (fallback.size() >= kGlobalFallbackBudget) {
                fallback.resize(kGlobalFallbackBudget);
                break;
            }
        }
        return fallback;
    }
}

std::vector<Scene> build_scene_level(std::span<const Segment> segments, const BuildConfig& config,
                                     ChatBackend& builder, BuildReport& report) {
    std::vector<std::string> captions;
    std::vector<TimeRange> ranges;
    for (const Segment& s : segments) {
        captions.push_back(s.composed_text);
        ranges.push_back(s.range);
    }
    auto chunks = chunk_captions(captions, static_cast<std::size_t>(config.chunk_size),
                                 static_cast<std::size_t>(config.chunk_overlap));

    // Boundary calls fan out per chunk; reconciliation is order-independent
    // (set union), report lines are appended in chunk order afterwards.
    std::vector<std::vector<std::size_t>> proposals(chunks.size());
    std::vector<BuildReport> chunk_reports(chunks.size());
    parallel_for(chunks.size(), config.workers, [&](std::size_t c) {
        std::span<const TimeRange> chunk_ranges(ranges.data() + chunks[c].first_segment,
                                                chunks[c].texts.size());
        proposals[c] = detect_boundaries(chunks[c], chunk_ranges, builder, &chunk_reports[c]);
    });
    for (std::size_t c = 0; c < chunks.size(); ++c)
        for (const auto& rec : chunk_reports[c].records())
            report.add(rec);

    std::vector<Scene> scenes = reconcile_boundaries(proposals, segments.size());
    for (Scene& scene : scenes)
        scene.summary = summarize_scene(scene, segments, builder, &report);
    report.add({{"phase", "scenes"}, {"chunks", chunks.size()}, {"scenes", scenes.size()}});
    return scenes;
}

} // namespace vix
