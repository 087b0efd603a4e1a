#include "vix/prompts.hpp"

#include "vix/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace vix::prompts {

namespace {

std::string one_line(std::string_view text) {
    std::string out(text);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

std::string speakers_line(std::span<const std::string> speakers) {
    if (speakers.empty())
        return "Speakers: (none)";
    std::string line = "Speakers: ";
    for (std::size_t i = 0; i < speakers.size(); ++i) {
        if (i > 0)
            line += ", ";
        line += speakers[i];
    }
    return line;
}

std::string transcript_block(std::span<const SpeakerTurn> turns) {
    if (turns.empty())
        return "Transcript: (none)";
    std::string block = "Transcript:";
    for (const SpeakerTurn& t : turns)
        block += fmt::format("\n[{}] {}: {}", render_span(t.range), t.speaker, one_line(t.text));
    return block;
}

} // namespace

std::string task_header(std::string_view task_name) {
    return fmt::format("## task: {}\n", task_name);
}

std::optional<std::string> prompt_task(std::string_view prompt_text) {
    constexpr std::string_view prefix = "## task: ";
    if (!prompt_text.starts_with(prefix))
        return std::nullopt;
    auto rest = prompt_text.substr(prefix.size());
    auto nl = rest.find('\n');
    return std::string(rest.substr(0, nl));
}

std::optional<std::string> request_task(const ChatRequest& req) {
    if (req.messages.empty() || req.messages.front().role != "system")
        return std::nullopt;
    return prompt_task(req.messages.front().content);
}

std::optional<nlohmann::json> extract_json_object(std::string_view text) {
    auto first = text.find('{');
    auto last = text.rfind('}');
    if (first == std::string_view::npos || last == std::string_view::npos || last < first)
        return std::nullopt;
    auto candidate = text.substr(first, last - first + 1);
    auto parsed = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object())
        return std::nullopt;
    return parsed;
}

// --- segment captioning ---

VisionRequest segment_caption_request(const TimeRange& window,
                                      std::span<const std::string> speakers,
                                      std::span<const SpeakerTurn> turns,
                                      const std::vector<FrameRef>& frames) {
    std::string prompt = task_header(task::segment_caption);
    prompt +=
        "You describe one fixed-length segment of a long video for a retrieval index.\n"
        "From the attached frames and the audio context below, return a JSON object\n"
        "{\"caption\": ..., \"speaker_info\": ...}.\n"
        "The caption covers the visible setting, subjects, actions, and on-screen text.\n"
        "The speaker_info field ties each listed speaker label to visual cues (appearance,\n"
        "actions, identity) observed while that label speaks; use an empty string when no\n"
        "speakers are listed.\n\n";
    prompt += fmt::format("Window: {}\n", render_span(window));
    prompt += speakers_line(speakers);
    prompt += '\n';
    prompt += transcript_block(turns);
    prompt += fmt::format("\nFrames: {} sampled images attached.", frames.size());
    return VisionRequest{std::move(prompt), frames};
}

CaptionReply parse_caption_reply(std::string_view text) {
    auto obj = extract_json_object(text);
    if (!obj)
        throw BackendRefusal("caption reply is not a JSON object");
    CaptionReply reply;
    reply.caption = obj->value("caption", std::string{});
    reply.speaker_info = obj->value("speaker_info", std::string{});
    if (reply.caption.empty())
        throw BackendRefusal("caption reply has an empty caption");
    return reply;
}

// --- entity extraction ---

ChatRequest entity_extraction_request(const Segment& segment) {
    ChatRequest req;
    std::string sys = task_header(task::entity_extraction);
    sys += "You identify the salient subjects of one video segment from its composed\n"
           "description: characters, locations, and events worth tracking across the video.\n"
           "Return a JSON object {\"entities\": [{\"name\": ..., \"category\": ..., \"description\": ...}]}\n"
           "with category one of character, location, event, other, and a one-sentence\n"
           "description grounded in this segment. Return {\"entities\": []} when nothing stands out.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Window: {}\n", render_span(segment.range));
    user += speakers_line(segment.speakers);
    user += "\nSegment description:\n";
    user += segment.composed_text;
    req.messages.push_back({"user", std::move(user)});
    return req;
}

std::vector<RawMention> parse_entities_reply(std::string_view text) {
    auto obj = extract_json_object(text);
    if (!obj || !obj->contains("entities") || !(*obj)["entities"].is_array())
        throw BackendRefusal("entity reply lacks an \"entities\" array");
    std::vector<RawMention> out;
    for (const auto& item : (*obj)["entities"]) {
        if (!item.is_object())
            throw BackendRefusal("entity entry is not an object");
        RawMention m;
        m.name = item.value("name", std::string{});
        m.category = entity_category_from_string(item.value("category", "other"));
        m.description = item.value("description", std::string{});
        if (m.name.empty())
            throw BackendRefusal("entity entry with empty name");
        out.push_back(std::move(m));
    }
    return out;
}

// --- cluster canonicalization ---

ChatRequest canonicalize_request(std::span<const EntityMention> members) {
    ChatRequest req;
    std::string sys = task_header(task::entity_canonicalization);
    sys += "You consolidate a cluster of candidate mentions that may describe one entity.\n"
           "If all members are the same identity, return a single unified group; if the\n"
           "cluster mixes distinct identities, split it. Return a JSON object\n"
           "{\"groups\": [{\"name\": ..., \"description\": ..., \"members\": [indices]}]}\n"
           "where every member index appears in exactly one group.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user =
        fmt::format("Category: {}\nMembers:", to_string(members.empty()
                                                            ? EntityCategory::other
                                                            : members.front().category));
    for (std::size_t i = 0; i < members.size(); ++i)
        user += fmt::format("\n{}. {} ({}): {}", i, members[i].name,
                            to_string(members[i].category), one_line(members[i].description));
    req.messages.push_back({"user", std::move(user)});
    return req;
}

std::vector<CanonGroup> parse_canonicalize_reply(std::string_view text, std::size_t member_count) {
    auto obj = extract_json_object(text);
    if (!obj || !obj->contains("groups") || !(*obj)["groups"].is_array())
        throw BackendRefusal("canonicalization reply lacks a \"groups\" array");
    std::vector<CanonGroup> out;
    std::set<std::size_t> seen;
    for (const auto& item : (*obj)["groups"]) {
        CanonGroup g;
        g.name = item.value("name", std::string{});
        g.description = item.value("description", std::string{});
        if (!item.contains("members") || !item["members"].is_array())
            throw BackendRefusal("canonicalization group lacks members");
        for (const auto& idx : item["members"]) {
            if (!idx.is_number_unsigned())
                throw BackendRefusal("canonicalization member index is not an ordinal");
            auto v = idx.get<std::size_t>();
            if (v >= member_count || !seen.insert(v).second)
                throw BackendRefusal("canonicalization groups do not partition the members");
            g.members.push_back(v);
        }
        if (g.members.empty())
            continue;
        out.push_back(std::move(g));
    }
    if (seen.size() != member_count)
        throw BackendRefusal("canonicalization groups do not partition the members");
    return out;
}

// --- speaker-priority merge ---

ChatRequest merge_descriptions_request(const CanonicalEntity& a, const CanonicalEntity& b,
                                       std::span<const std::string> shared_labels) {
    ChatRequest req;
    std::string sys = task_header(task::entity_merge);
    sys += "Two canonical entities were identified as the same identity through shared\n"
           "speaker labels. Write one unified description covering both. Reply with the\n"
           "description text only.";
    req.messages.push_back({"system", std::move(sys)});
    std::string labels;
    for (std::size_t i = 0; i < shared_labels.size(); ++i) {
        if (i > 0)
            labels += ", ";
        labels += shared_labels[i];
    }
    std::string user = fmt::format("Name: {}\nShared speaker labels: {}\nDescriptions:\n- {}\n- {}",
                                   a.name, labels, one_line(a.global_description),
                                   one_line(b.global_description));
    req.messages.push_back({"user", std::move(user)});
    return req;
}

// --- entity re-captioning ---

ChatRequest recaption_request(const CanonicalEntity& entity, const Segment& segment) {
    ChatRequest req;
    std::string sys = task_header(task::entity_recaption);
    sys += "You rewrite one segment description so it centers on a single entity: its\n"
           "appearance, actions, and the events it takes part in within this segment,\n"
           "excluding unrelated context. Reply with the re-caption text only.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Entity: {} ({})\nEntity description: {}\nWindow: {}\n",
                                   entity.name, to_string(entity.category),
                                   one_line(entity.global_description), render_span(segment.range));
    user += "Segment description:\n";
    user += segment.composed_text;
    req.messages.push_back({"user", std::move(user)});
    return req;
}

// --- scene structure ---

ChatRequest boundary_request(std::size_t first_segment, std::span<const std::string> texts,
                             std::span<const TimeRange> ranges) {
    ChatRequest req;
    std::string sys = task_header(task::scene_boundaries);
    sys += "You split a chunk of consecutive video segment descriptions into scenes. A new\n"
           "scene starts where the narrative focus changes: setting, participants, or\n"
           "activity. Return a JSON object {\"boundaries\": [segment ordinals where a new\n"
           "scene starts]} with ordinals inside the chunk, or {\"boundaries\": []} when the\n"
           "chunk is one continuous scene.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Chunk: segments {:06}–{:06}\nDescriptions:", first_segment,
                                   first_segment + texts.size() - 1);
    for (std::size_t i = 0; i < texts.size(); ++i)
        user += fmt::format("\n[{:06} | {}]\n{}", first_segment + i, render_span(ranges[i]),
                            texts[i]);
    req.messages.push_back({"user", std::move(user)});
    return req;
}

std::vector<std::size_t> parse_boundaries_reply(std::string_view text) {
    auto obj = extract_json_object(text);
    if (!obj || !obj->contains("boundaries") || !(*obj)["boundaries"].is_array())
        throw BackendRefusal("boundary reply lacks a \"boundaries\" array");
    std::vector<std::size_t> out;
    for (const auto& b : (*obj)["boundaries"]) {
        if (!b.is_number_unsigned())
            throw BackendRefusal("boundary entry is not an ordinal");
        out.push_back(b.get<std::size_t>());
    }
    return out;
}

ChatRequest scene_summary_request(std::size_t first_segment, std::size_t last_segment,
                                  const TimeRange& span, std::span<const std::string> texts) {
    ChatRequest req;
    std::string sys = task_header(task::scene_summary);
    sys += "You summarize one scene of a long video from its segment descriptions, covering\n"
           "its key characters, events, and transitions. Reply with the summary text only.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Span: segments {:06}–{:06} ({})\nDescriptions:",
                                   first_segment, last_segment, render_span(span));
    for (const std::string& t : texts) {
        user += '\n';
        user += t;
    }
    req.messages.push_back({"user", std::move(user)});
    return req;
}

ChatRequest global_summary_request(std::span<const Scene> scenes,
                                   std::span<const TimeRange> scene_spans) {
    ChatRequest req;
    std::string sys = task_header(task::global_summary);
    sys += "You write the video-level summary from the ordered scene summaries: the main\n"
           "storyline, recurring entities, and overall context such as background and video\n"
           "type. Reply with the summary text only.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Scene summaries ({}):", scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i)
        user += fmt::format("\n- [{}] {}", render_span(scene_spans[i]), one_line(scenes[i].summary));
    req.messages.push_back({"user", std::move(user)});
    return req;
}

// --- agentic search ---

ChatRequest scene_browse_request(std::string_view query, std::string_view global_summary,
                                 std::span<const Scene> scenes,
                                 std::span<const TimeRange> scene_spans) {
    ChatRequest req;
    std::string sys = task_header(task::scene_browse);
    sys += "You navigate a long video through its scene summaries. Select the scenes most\n"
           "relevant to the query and describe their storyline. Return a JSON object\n"
           "{\"scene_ids\": [...], \"storyline\": ...}.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Query: {}\nGlobal summary:\n{}\nScenes:", query, global_summary);
    for (std::size_t i = 0; i < scenes.size(); ++i)
        user += fmt::format("\nScene {} [{}]: {}", scenes[i].id, render_span(scene_spans[i]),
                            one_line(scenes[i].summary));
    req.messages.push_back({"user", std::move(user)});
    return req;
}

SceneBrowseReply parse_scene_browse_reply(std::string_view text) {
    auto obj = extract_json_object(text);
    if (!obj || !obj->contains("scene_ids") || !(*obj)["scene_ids"].is_array())
        throw BackendRefusal("scene browse reply lacks a \"scene_ids\" array");
    SceneBrowseReply reply;
    for (const auto& id : (*obj)["scene_ids"]) {
        if (!id.is_number_unsigned())
            throw BackendRefusal("scene id is not an ordinal");
        reply.scene_ids.push_back(id.get<std::size_t>());
    }
    reply.storyline = obj->value("storyline", std::string{});
    return reply;
}

ChatRequest forced_answer_request(std::string_view memory_text) {
    ChatRequest req;
    std::string sys = task_header(task::forced_answer);
    sys += "The reasoning budget is exhausted. Give your best final answer to the question\n"
           "from the context gathered so far. Reply with the answer text only.";
    req.messages.push_back({"system", std::move(sys)});
    req.messages.push_back({"user", std::string(memory_text)});
    return req;
}

ChatRequest clarify_answer_request(std::string_view question,
                                   std::span<const std::pair<std::string, std::string>> options,
                                   std::string_view answer_text) {
    ChatRequest req;
    std::string sys = task_header(task::clarify_answer);
    sys += "Map the final answer onto exactly one of the offered option labels. Reply with\n"
           "the single label letter only.";
    req.messages.push_back({"system", std::move(sys)});
    std::string user = fmt::format("Question: {}\nOptions:", question);
    for (const auto& [label, text] : options)
        user += fmt::format("\n{}. {}", label, text);
    user += fmt::format("\nFinal answer: {}", answer_text);
    req.messages.push_back({"user", std::move(user)});
    return req;
}

} // namespace vix::prompts
