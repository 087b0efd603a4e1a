#pragma once

#include "vix/backends.hpp"
#include "vix/frames.hpp"
#include "vix/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

/// Tool names exposed to the planner.
namespace tool_names {
inline constexpr std::string_view scene_browse = "global_scene_browse_tool";
inline constexpr std::string_view entity_search = "entity_search_tool";
inline constexpr std::string_view caption_search = "clip_caption_search_wtime_tool";
inline constexpr std::string_view visual_search = "clip_visual_search_wtime_tool";
inline constexpr std::string_view caption_inspect = "clip_caption_inspect_tool";
inline constexpr std::string_view visual_inspect = "visual_inspect_tool";
inline constexpr std::string_view finish = "finish";
} // namespace tool_names

/// What every tool returns: response text, the segment- or scene-aligned
/// timestamps backing it, and the records consulted.
struct ToolResult {
    std::string response;
    std::vector<TimeRange> timestamps;
    std::vector<std::string> provenance;
};

struct ToolConfig {
    int search_k = 5;
    int entity_top_k1 = 5;
    int entity_top_k2 = 8;
    int max_frames = 50;
    double inspect_fps = 1.0;

    static ToolConfig from_build_config(const BuildConfig& c) {
        return ToolConfig{c.search_k, c.entity_top_k1, c.entity_top_k2, c.max_frames, 1.0};
    }
};

/// The multi-granularity retrieval tools over one immutable IndexDatabase.
/// Reentrant: concurrent calls from independent agent runs are safe; within
/// one run the loop invokes tools sequentially.
class Toolbox {
public:
    Toolbox(const IndexDatabase& db, const BackendSet& backends);
    Toolbox(const IndexDatabase& db, const BackendSet& backends, ToolConfig config);

    /// Coarse navigation: the reasoner reads all scene summaries and selects
    /// the relevant ones; timestamps are the selected scenes' spans.
    ToolResult scene_browse(std::string_view query);

    /// Fine-grained retrieval over composed segment texts within the given
    /// ranges (empty = whole video).
    ToolResult caption_search(std::string_view query, const std::vector<TimeRange>& ranges);

    /// Complementary retrieval over the cross-modal visual embeddings.
    ToolResult visual_search(std::string_view query, const std::vector<TimeRange>& ranges);

    /// Two-stage entity retrieval: top-K1 entities by global description,
    /// then top-K2 of their re-captioned segments against the same query.
    ToolResult entity_search(std::string_view query);

    /// Pure lookup: composed texts of every segment intersecting the ranges,
    /// in time order. No model call.
    ToolResult caption_inspect(const std::vector<TimeRange>& ranges) const;

    /// Visual verification: frames sampled at 1 fps over the ranges, thinned
    /// to the frame cap, then answered by the inspection VLM.
    ToolResult visual_inspect(std::string_view query, const std::vector<TimeRange>& ranges);

    /// Dispatches a planner tool call by name. `finish` is the agent's
    /// terminal action and is rejected here.
    ToolResult invoke(const ToolCall& call);

    /// Schemas for all seven planner-facing tools, finish included.
    static const std::vector<ToolSchema>& planner_schemas();

    static bool is_tool_name(std::string_view name);

    const IndexDatabase& database() const { return db_; }
    const ToolConfig& config() const { return cfg_; }

private:
    const FrameCatalog& catalog();
    std::vector<TimeRange> aligned_spans(const std::vector<TimeRange>& ranges) const;

    const IndexDatabase& db_;
    const BackendSet& backends_;
    ToolConfig cfg_;
    std::optional<FrameCatalog> catalog_; // lazy; only visual_inspect needs frames
};

/// Parses tool-call time ranges: a JSON array of ["HH:MM:SS", "HH:MM:SS"]
/// pairs. An absent or empty array means the whole video.
std::vector<TimeRange> parse_time_ranges_arg(const nlohmann::json& args);

} // namespace vix
