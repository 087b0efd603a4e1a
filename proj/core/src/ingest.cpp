#include "vix/ingest.hpp"

#include "vix/errors.hpp"
#include "vix/frames.hpp"
#include "vix/parallel.hpp"
#include "vix/prompts.hpp"
#include "vix/transcript.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace vix {

std::vector<TimeRange> partition_timeline(double duration_s, double segment_len_s) {
    if (duration_s <= 0.0)
        throw InputError("duration must be positive");
    if (segment_len_s <= 0.0)
        throw InputError("segment length must be positive");
    std::vector<TimeRange> out;
    for (std::size_t i = 0; static_cast<double>(i) * segment_len_s < duration_s; ++i) {
        double start = static_cast<double>(i) * segment_len_s;
        out.push_back(TimeRange{start, std::min(start + segment_len_s, duration_s)});
    }
    return out;
}

TurnAssignment assign_turns_to_segment(std::span<const SpeakerTurn> turns,
                                       const TimeRange& segment_range) {
    TurnAssignment out;
    for (const SpeakerTurn& turn : turns) {
        if (!intersects(turn.range, segment_range))
            continue;
        out.turns.push_back(turn);
        if (std::find(out.speakers.begin(), out.speakers.end(), turn.speaker) ==
            out.speakers.end())
            out.speakers.push_back(turn.speaker);
    }
    return out;
}

CaptionResult caption_segment(const std::vector<FrameRef>& frames,
                              std::span<const std::string> speakers,
                              std::span<const SpeakerTurn> turns, const TimeRange& window,
                              VisionBackend& captioner) {
    if (frames.empty())
        throw MissingFrames(fmt::format("no frames sampled for window {}", render_span(window)));
    VisionRequest req = prompts::segment_caption_request(window, speakers, turns, frames);
    std::string reply = captioner.vision_answer(req);
    prompts::CaptionReply parsed;
    try {
        parsed = prompts::parse_caption_reply(reply);
    } catch (const BackendRefusal&) {
        VisionRequest retry = req;
        retry.prompt += "\nReturn a single valid JSON object only.";
        parsed = prompts::parse_caption_reply(captioner.vision_answer(retry));
    }
    CaptionResult result{std::move(parsed.caption), std::move(parsed.speaker_info)};
    if (speakers.empty())
        result.fused_speaker_info.clear();
    return result;
}

std::string compose_segment_text(std::string_view fused_speaker_info,
                                 std::span<const SpeakerTurn> turns, std::string_view caption) {
    std::vector<std::string> blocks;
    if (!fused_speaker_info.empty())
        blocks.push_back(fmt::format("SPEAKERS:\n{}", fused_speaker_info));
    if (!turns.empty()) {
        std::string block = "TRANSCRIPT:";
        for (const SpeakerTurn& t : turns) {
            std::string text = t.text;
            std::replace(text.begin(), text.end(), '\n', ' ');
            block += fmt::format("\n[{}] {}: {}", render_span(t.range), t.speaker, text);
        }
        blocks.push_back(std::move(block));
    }
    if (!caption.empty())
        blocks.push_back(fmt::format("CAPTION:\n{}", caption));
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0)
            out += "\n\n";
        out += blocks[i];
    }
    return out;
}

std::vector<Segment> build_segments(const SourceManifest& manifest, const BuildConfig& config,
                                    const BackendSet& backends) {
    if (manifest.duration_s <= 0.0)
        throw InputError(fmt::format("manifest {} has no duration", manifest.video_id));
    if (manifest.frames_per_segment < 1)
        throw InputError("frames_per_segment must be at least 1");

    std::vector<SpeakerTurn> turns;
    if (!manifest.transcript_path.empty()) {
        std::string language = manifest.language_tag.empty()
                                   ? transcript_language(manifest.transcript_path)
                                   : manifest.language_tag;
        if (is_english_tag(language))
            turns = load_diarized_transcript(manifest.transcript_path);
        // Non-English audio: segments keep empty speaker/transcript fields.
    }

    FrameCatalog catalog(manifest.frames_dir);
    if (catalog.empty())
        throw MissingFrames(
            fmt::format("frames directory {} holds no frame files", manifest.frames_dir));

    std::vector<TimeRange> partition = partition_timeline(manifest.duration_s,
                                                          manifest.segment_len_s);
    std::vector<Segment> segments(partition.size());
    parallel_for(partition.size(), config.workers, [&](std::size_t i) {
        Segment seg;
        seg.index = i;
        seg.range = partition[i];
        TurnAssignment assigned = assign_turns_to_segment(turns, seg.range);
        seg.speakers = std::move(assigned.speakers);
        seg.transcript = std::move(assigned.turns);
        seg.frame_refs = catalog.sample_uniform(
            seg.range, static_cast<std::size_t>(manifest.frames_per_segment));
        CaptionResult caption = caption_segment(seg.frame_refs, seg.speakers, seg.transcript,
                                                seg.range, *backends.captioner);
        seg.caption = std::move(caption.caption);
        seg.fused_speaker_info = std::move(caption.fused_speaker_info);
        seg.composed_text =
            compose_segment_text(seg.fused_speaker_info, seg.transcript, seg.caption);
        seg.text_embedding = backends.text_embedder->embed_text(seg.composed_text);
        seg.visual_embedding = backends.visual_embedder->embed_frames(seg.frame_refs);
        segments[i] = std::move(seg);
    });
    return segments;
}

} // namespace vix
