#pragma once

#include "vix/backends.hpp"
#include "vix/model.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

/// Uniform segment partition: ceil(duration/len) half-open ranges covering
/// [0, duration) exactly; all but possibly the last have exact length.
std::vector<TimeRange> partition_timeline(double duration_s, double segment_len_s);

struct TurnAssignment {
    std::vector<std::string> speakers; // unique labels, in order of first turn
    std::vector<SpeakerTurn> turns;
};

/// Every turn whose range intersects the segment window belongs to it; turns
/// spanning a boundary are duplicated into each side rather than split, so no
/// utterance is ever cut mid-sentence.
TurnAssignment assign_turns_to_segment(std::span<const SpeakerTurn> turns,
                                       const TimeRange& segment_range);

struct CaptionResult {
    std::string caption;            // V_i
    std::string fused_speaker_info; // P_i'
};

/// One captioner pass over the sampled frames plus the audio context,
/// producing both the segment caption and the fused speaker information.
/// Segments without speakers always yield empty fused info.
CaptionResult caption_segment(const std::vector<FrameRef>& frames,
                              std::span<const std::string> speakers,
                              std::span<const SpeakerTurn> turns, const TimeRange& window,
                              VisionBackend& captioner);

/// Deterministic composition of the segment text: fused-speaker block,
/// transcript block, caption block, each under a labeled header, empty blocks
/// omitted.
std::string compose_segment_text(std::string_view fused_speaker_info,
                                 std::span<const SpeakerTurn> turns, std::string_view caption);

/// Runs the full segment pipeline: partition, transcript alignment (dropped
/// when the audio language is not English), captioning, composition, and both
/// embeddings. Per-segment work runs on config.workers threads; assembly is
/// order-preserving.
std::vector<Segment> build_segments(const SourceManifest& manifest, const BuildConfig& config,
                                    const BackendSet& backends);

} // namespace vix
