#include "vix/tools.hpp"

#include "vix/errors.hpp"
#include "vix/prompts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace vix {

namespace {

constexpr std::size_t kMaxEntitySpansShown = 8;

nlohmann::json time_ranges_schema() {
    return {{"type", "array"},
            {"items",
             {{"type", "array"},
              {"items", {{"type", "string"}, {"pattern", "^\\d{2}:\\d{2}:\\d{2}$"}}},
              {"minItems", 2},
              {"maxItems", 2}}}};
}

nlohmann::json query_schema(std::string_view description) {
    return {{"type", "object"},
            {"properties", {{"query", {{"type", "string"}, {"description", description}}}}},
            {"required", {"query"}}};
}

std::string render_hits(std::string_view heading, const std::vector<Hit>& hits) {
    if (hits.empty())
        return fmt::format("{}\nNo matching segments within the given time ranges.",
                           heading);
    std::string out{heading};
    for (std::size_t i = 0; i < hits.size(); ++i)
        out += fmt::format("\n{}. [{}] (score {:.3f})\n{}", i + 1, render_span(hits[i].range),
                           hits[i].score, hits[i].payload);
    return out;
}

std::vector<TimeRange> hit_spans(const std::vector<Hit>& hits) {
    std::vector<TimeRange> spans;
    for (const Hit& h : hits)
        spans.push_back(h.range);
    std::sort(spans.begin(), spans.end(), [](const TimeRange& a, const TimeRange& b) {
        return a.start_s < b.start_s;
    });
    spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
    return spans;
}

std::vector<std::string> hit_provenance(const std::vector<Hit>& hits) {
    std::vector<std::string> out;
    for (const Hit& h : hits)
        out.push_back(fmt::format("{}/{}", to_string(h.id.kind), h.id.key));
    return out;
}

} // namespace

std::vector<TimeRange> parse_time_ranges_arg(const nlohmann::json& args) {
    std::vector<TimeRange> out;
    if (!args.contains("time_ranges"))
        return out;
    const nlohmann::json& ranges = args["time_ranges"];
    if (!ranges.is_array())
        throw InputError("time_ranges must be an array of [start, end] pairs");
    for (const auto& pair : ranges) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
            throw InputError("each time range must be a pair of \"HH:MM:SS\" strings");
        out.push_back(parse_span(pair[0].get<std::string>(), pair[1].get<std::string>()));
    }
    return out;
}

Toolbox::Toolbox(const IndexDatabase& db, const BackendSet& backends)
    : Toolbox(db, backends, ToolConfig::from_build_config(db.config)) {}

Toolbox::Toolbox(const IndexDatabase& db, const BackendSet& backends, ToolConfig config)
    : db_(db), backends_(backends), cfg_(config) {}

const FrameCatalog& Toolbox::catalog() {
    if (!catalog_)
        catalog_.emplace(db_.manifest.frames_dir);
    return *catalog_;
}

std::vector<TimeRange> Toolbox::aligned_spans(const std::vector<TimeRange>& ranges) const {
    std::vector<TimeRange> out;
    for (const Segment& seg : db_.segments)
        if (passes_filter(seg.range, ranges))
            out.push_back(seg.range);
    return out;
}

ToolResult Toolbox::scene_browse(std::string_view query) {
    if (db_.scenes.empty())
        throw InputError("scene browse over a database with no scenes");
    std::vector<TimeRange> spans;
    for (const Scene& s : db_.scenes)
        spans.push_back(db_.scene_range(s));

    auto reply = prompts::chat_parsed(
        *backends_.reasoner,
        prompts::scene_browse_request(query, db_.global_summary, db_.scenes, spans),
        [](std::string_view text) { return prompts::parse_scene_browse_reply(text); });

    ToolResult result;
    result.response = reply.storyline;
    std::set<std::size_t> seen;
    for (std::size_t id : reply.scene_ids) {
        if (id >= db_.scenes.size() || !seen.insert(id).second)
            continue;
        const Scene& s = db_.scenes[id];
        TimeRange span = db_.scene_range(s);
        result.response += fmt::format("\nScene {} [{}]: {}", id, render_span(span), s.summary);
        result.timestamps.push_back(span);
        result.provenance.push_back(fmt::format("scene/{}", id));
    }
    return result;
}

ToolResult Toolbox::caption_search(std::string_view query, const std::vector<TimeRange>& ranges) {
    std::vector<float> q = backends_.text_embedder->embed_text(query);
    auto hits = db_.store.search(q, VectorKind::segment_text,
                                 static_cast<std::size_t>(cfg_.search_k), ranges);
    ToolResult result;
    result.response = render_hits(fmt::format("Segment matches for \"{}\":", query), hits);
    result.timestamps = hit_spans(hits);
    result.provenance = hit_provenance(hits);
    return result;
}

ToolResult Toolbox::visual_search(std::string_view query, const std::vector<TimeRange>& ranges) {
    std::vector<float> q = backends_.visual_embedder->embed_query(query);
    auto hits = db_.store.search(q, VectorKind::segment_visual,
                                 static_cast<std::size_t>(cfg_.search_k), ranges);
    ToolResult result;
    result.response = render_hits(fmt::format("Visually similar segments for \"{}\":", query), hits);
    result.timestamps = hit_spans(hits);
    result.provenance = hit_provenance(hits);
    return result;
}

ToolResult Toolbox::entity_search(std::string_view query) {
    ToolResult result;
    if (db_.entities.empty()) {
        result.response = "No entities are indexed for this video.";
        return result;
    }
    std::vector<float> q = backends_.text_embedder->embed_text(query);
    auto entity_hits = db_.store.search(q, VectorKind::entity_global,
                                        static_cast<std::size_t>(cfg_.entity_top_k1));

    result.response = fmt::format("Entities related to \"{}\":", query);
    std::vector<std::string> candidate_keys;
    for (std::size_t i = 0; i < entity_hits.size(); ++i) {
        const Hit& hit = entity_hits[i];
        std::size_t id = std::stoul(hit.id.key);
        const CanonicalEntity& e = db_.entities[id];

        std::string spans;
        std::size_t shown = 0;
        for (std::size_t seg : e.linked_segments) {
            if (shown == kMaxEntitySpansShown) {
                spans += fmt::format(" (+{} more)", e.linked_segments.size() - shown);
                break;
            }
            if (shown > 0)
                spans += ", ";
            spans += render_span(db_.segments[seg].range);
            ++shown;
        }
        result.response += fmt::format("\n{}. {} ({}) [{}]: {}", i + 1, e.name,
                                       to_string(e.category), spans, e.global_description);
        result.provenance.push_back(fmt::format("{}/{}", to_string(hit.id.kind), hit.id.key));
        for (const auto& [seg, text] : e.recaptions)
            candidate_keys.push_back(recaption_key(e.id, seg));
    }

    auto recaption_hits = db_.store.rank_keys(q, VectorKind::entity_recaption, candidate_keys,
                                              static_cast<std::size_t>(cfg_.entity_top_k2));
    if (!recaption_hits.empty())
        result.response += "\nMost relevant moments:";
    for (std::size_t i = 0; i < recaption_hits.size(); ++i) {
        const Hit& hit = recaption_hits[i];
        result.response += fmt::format("\n{}. [{}] {}", i + 1, render_span(hit.range), hit.payload);
        result.provenance.push_back(fmt::format("{}/{}", to_string(hit.id.kind), hit.id.key));
    }
    result.timestamps = hit_spans(recaption_hits);
    return result;
}

ToolResult Toolbox::caption_inspect(const std::vector<TimeRange>& ranges) const {
    ToolResult result;
    for (const Segment& seg : db_.segments) {
        if (!passes_filter(seg.range, ranges))
            continue;
        if (!result.response.empty())
            result.response += "\n\n";
        result.response += fmt::format("[{}]\n{}", render_span(seg.range), seg.composed_text);
        result.timestamps.push_back(seg.range);
        result.provenance.push_back(fmt::format("segment/{}", seg.index));
    }
    if (result.response.empty())
        result.response = "No segments intersect the given time ranges.";
    return result;
}

ToolResult Toolbox::visual_inspect(std::string_view query, const std::vector<TimeRange>& ranges) {
    std::vector<TimeRange> effective =
        ranges.empty() ? std::vector<TimeRange>{TimeRange{0.0, db_.manifest.duration_s}} : ranges;
    std::vector<FrameRef> frames = catalog().sample_fps(effective, cfg_.inspect_fps,
                                                        static_cast<std::size_t>(cfg_.max_frames));
    std::string spans_text;
    for (std::size_t i = 0; i < effective.size(); ++i) {
        if (i > 0)
            spans_text += ", ";
        spans_text += render_span(effective[i]);
    }
    VisionRequest req;
    req.prompt = fmt::format("Question: {}\nTime ranges: {}\nAnswer strictly from the attached "
                             "frames.",
                             query, spans_text);
    req.frames = frames;

    ToolResult result;
    result.response = backends_.inspector->vision_answer(req);
    result.timestamps = aligned_spans(effective);
    for (const FrameRef& f : frames)
        result.provenance.push_back(fmt::format("frame/{}", f.path));
    return result;
}

ToolResult Toolbox::invoke(const ToolCall& call) {
    const nlohmann::json& args = call.arguments;
    auto query_arg = [&](const char* field) -> std::string {
        if (!args.contains(field) || !args[field].is_string() ||
            args[field].get<std::string>().empty())
            throw InputError(fmt::format("tool {} requires a \"{}\" string argument", call.name,
                                         field));
        return args[field].get<std::string>();
    };
    if (call.name == tool_names::scene_browse)
        return scene_browse(query_arg("query"));
    if (call.name == tool_names::entity_search)
        return entity_search(query_arg("query"));
    if (call.name == tool_names::caption_search)
        return caption_search(query_arg("query"), parse_time_ranges_arg(args));
    if (call.name == tool_names::visual_search)
        return visual_search(query_arg("query"), parse_time_ranges_arg(args));
    if (call.name == tool_names::caption_inspect)
        return caption_inspect(parse_time_ranges_arg(args));
    if (call.name == tool_names::visual_inspect)
        return visual_inspect(query_arg("question"), parse_time_ranges_arg(args));
    if (call.name == tool_names::finish)
        throw InputError("finish is the agent's terminal action, not a database tool");
    throw InputError(fmt::format("unknown tool \"{}\"", call.name));
}

const std::vector<ToolSchema>& Toolbox::planner_schemas() {
    static const std::vector<ToolSchema> schemas = [] {
        std::vector<ToolSchema> s;
        s.push_back({std::string(tool_names::scene_browse),
                     "Scene-level navigation: locate scenarios, temporal order, and storyline "
                     "context.",
                     query_schema("scene-related query")});
        s.push_back({std::string(tool_names::entity_search),
                     "Entity-centric retrieval: find the subjects involved in events and the "
                     "segments where they appear.",
                     query_schema("entity-related query")});
        nlohmann::json search_params{
            {"type", "object"},
            {"properties",
             {{"query", {{"type", "string"}}}, {"time_ranges", time_ranges_schema()}}},
            {"required", {"query"}}};
        s.push_back({std::string(tool_names::caption_search),
                     "Search segment captions and transcripts within the given time ranges.",
                     search_params});
        s.push_back({std::string(tool_names::visual_search),
                     "Search visual segment embeddings within the given time ranges.",
                     search_params});
        s.push_back({std::string(tool_names::caption_inspect),
                     "Read the stored captions and transcripts for every segment in the given "
                     "time ranges.",
                     nlohmann::json{{"type", "object"},
                                    {"properties", {{"time_ranges", time_ranges_schema()}}},
                                    {"required", {"time_ranges"}}}});
        s.push_back({std::string(tool_names::visual_inspect),
                     "Answer a question by looking at frames sampled from a narrow list of time "
                     "ranges.",
                     nlohmann::json{{"type", "object"},
                                    {"properties",
                                     {{"question", {{"type", "string"}}},
                                      {"time_ranges", time_ranges_schema()}}},
                                    {"required", {"question", "time_ranges"}}}});
        s.push_back({std::string(tool_names::finish),
                     "Finish with the final answer once the question is resolved.",
                     nlohmann::json{{"type", "object"},
                                    {"properties", {{"answer", {{"type", "string"}}}}},
                                    {"required", {"answer"}}}});
        return s;
    }();
    return schemas;
}

bool Toolbox::is_tool_name(std::string_view name) {
    for (const ToolSchema& s : planner_schemas())
        if (s.name == name)
            return true;
    return false;
}

} // namespace vix
