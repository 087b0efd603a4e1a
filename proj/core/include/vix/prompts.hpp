#pragma once

#include "vix/backends.hpp"
#include "vix/errors.hpp"
#include "vix/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vix::prompts {

/// Machine-readable task tag carried as the first line of every builder-side
/// prompt ("## task: <name>"). Real backends ignore it; mocks and logs key on
/// it. The planner prompt carries no tag: it is recognized by offered tools.
namespace task {
inline constexpr std::string_view segment_caption = "segment_caption";
inline constexpr std::string_view entity_extraction = "entity_extraction";
inline constexpr std::string_view entity_canonicalization = "entity_canonicalization";
inline constexpr std::string_view entity_merge = "entity_merge";
inline constexpr std::string_view entity_recaption = "entity_recaption";
inline constexpr std::string_view scene_boundaries = "scene_boundaries";
inline constexpr std::string_view scene_summary = "scene_summary";
inline constexpr std::string_view global_summary = "global_summary";
inline constexpr std::string_view scene_browse = "scene_browse";
inline constexpr std::string_view forced_answer = "forced_answer";
inline constexpr std::string_view clarify_answer = "clarify_answer";
} // namespace task

std::string task_header(std::string_view task_name);

/// Task tag of a chat request (first system line), or nullopt.
std::optional<std::string> request_task(const ChatRequest& req);
std::optional<std::string> prompt_task(std::string_view prompt_text);

// --- segment captioning (vision pass on the builder model) ---

VisionRequest segment_caption_request(const TimeRange& window,
                                      std::span<const std::string> speakers,
                                      std::span<const SpeakerTurn> turns,
                                      const std::vector<FrameRef>& frames);

struct CaptionReply {
    std::string caption;
    std::string speaker_info;
};
/// Parses {"caption":..., "speaker_info":...}; throws BackendRefusal when the
/// reply is not usable.
CaptionReply parse_caption_reply(std::string_view text);

// --- entity extraction ---

ChatRequest entity_extraction_request(const Segment& segment);

struct RawMention {
    std::string name;
    EntityCategory category = EntityCategory::other;
    std::string description;
};
std::vector<RawMention> parse_entities_reply(std::string_view text);

// --- cluster canonicalization ---

ChatRequest canonicalize_request(std::span<const EntityMention> members);

struct CanonGroup {
    std::string name;
    std::string description;
    std::vector<std::size_t> members; // indices into the cluster member list
};
/// Parses the groups and checks they partition 0..member_count-1 exactly;
/// throws BackendRefusal otherwise.
std::vector<CanonGroup> parse_canonicalize_reply(std::string_view text, std::size_t member_count);

// --- speaker-priority merge ---

ChatRequest merge_descriptions_request(const CanonicalEntity& a, const CanonicalEntity& b,
                                       std::span<const std::string> shared_labels);

// --- entity re-captioning ---

ChatRequest recaption_request(const CanonicalEntity& entity, const Segment& segment);

// --- scene structure ---

ChatRequest boundary_request(std::size_t first_segment, std::span<const std::string> texts,
                             std::span<const TimeRange> ranges);
std::vector<std::size_t> parse_boundaries_reply(std::string_view text);

ChatRequest scene_summary_request(std::size_t first_segment, std::size_t last_segment,
                                  const TimeRange& span, std::span<const std::string> texts);

ChatRequest global_summary_request(std::span<const Scene> scenes,
                                   std::span<const TimeRange> scene_spans);

// --- agentic search ---

ChatRequest scene_browse_request(std::string_view query, std::string_view global_summary,
                                 std::span<const Scene> scenes,
                                 std::span<const TimeRange> scene_spans);

struct SceneBrowseReply {
    std::vector<std::size_t> scene_ids;
    std::string storyline;
};
SceneBrowseReply parse_scene_browse_reply(std::string_view text);

ChatRequest forced_answer_request(std::string_view memory_text);

ChatRequest clarify_answer_request(std::string_view question,
                                   std::span<const std::pair<std::string, std::string>> options,
                                   std::string_view answer_text);

/// Best-effort extraction of the first JSON object embedded in model output
/// (code fences and surrounding prose are tolerated). Nullopt when nothing
/// parses.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

/// Sends the request and runs `parse` over the reply text. A BackendRefusal
/// from the parser triggers exactly one corrective re-prompt; a second failure
/// propagates the refusal.
template <typename Parser>
auto chat_parsed(ChatBackend& backend, ChatRequest req, Parser&& parse) {
    ChatResponse first = backend.chat(req);
    try {
        return parse(first.text);
    } catch (const BackendRefusal&) {
    }
    req.messages.push_back({"assistant", first.text});
    req.messages.push_back({"user", "Reply again following the required format exactly."});
    ChatResponse second = backend.chat(req);
    return parse(second.text);
}

} // namespace vix::prompts
