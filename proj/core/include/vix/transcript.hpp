#pragma once

#include "vix/model.hpp"

#include <filesystem>
#include <vector>

namespace vix {

/// Loads a diarized transcript: JSON Lines, one turn per line, with fields
/// {"start": seconds, "end": seconds, "speaker": label, "text": utterance,
/// "language": optional tag}. Matches the record set emitted by common
/// ASR+diarization pipelines. Turns come back sorted by start time;
/// overlapping turns are preserved as-is. Throws ParseError naming the
/// offending line.
std::vector<SpeakerTurn> load_diarized_transcript(const std::filesystem::path& path);

/// Language tag of the transcript records ("" when none declare one). Used by
/// ingestion to drop non-English audio.
std::string transcript_language(const std::filesystem::path& path);

bool is_english_tag(std::string_view tag);

} // namespace vix
