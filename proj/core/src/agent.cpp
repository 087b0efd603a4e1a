#include "vix/agent.hpp"

#include "vix/errors.hpp"
#include "vix/prompts.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace vix {

namespace {

// The planner contract, rendered verbatim into every system prompt. The
// iteration budget is substituted at render time.
constexpr std::string_view kPlannerPromptTemplate =
    R"(GOAL
You will be given a set of tools to assist you exploring the video, understanding it and reasoning the answer.
Please follow the THINK -> ACT -> OBSERVE loop:
- THOUGHT: Reason step-by-step about what question to ask and which tool to call next.
- ACTION: Call exactly one tool that moves you closer to the final answer.
- OBSERVATION: Summarize the tool call's output.
Continue the loop until the user's query is fully resolved, then end your turn with the final answer.

TOOLS
Here are tools you can use to reveal your reasoning process whenever the provided information is insufficient:
- global_scene_browse_tool: for scene-related query to explore scenarios, temporal orders, and contextual structure in a rough manner without precise details (e.g., first appearance, second song, third collision).
- entity_search_tool: for entity-related information retrieval, finding important subjects involved in events.
- clip_caption_search_wtime_tool: to search from rough captions and audio transcriptions of local clips within a list of time ranges related to a query. If you want to search from the whole video, use the whole video time range.
- clip_visual_search_wtime_tool: to search from visual features of local clips within a list of time ranges (list[tuple[HH:MM:SS, HH:MM:SS]]) related to a query. If you want to search from the whole video, use the whole video time range. This tool may provide more detailed information as a supplement to clip_caption_search_wtime_tool.
- clip_caption_inspect_tool: to extract rough captions and audio transcriptions of local clips within any list of time ranges (list[tuple[HH:MM:SS, HH:MM:SS]]). This tool is suitable for further inspecting what happened in a time range before or after some events happened.
- visual_inspect_tool: to extract details from local visual clips within a narrow list of time ranges that covers less than 50 seconds to answer a question or retrieve query-related details. When the time ranges cover over 50 seconds, first use clip_caption_inspect_tool to get a rough context.
- finish: Once you believe you have found the answer, you can call the finish tool with an answer.

TOOL PREFERENCES
- When no context is given, call global_scene_browse_tool for scene-related queries to get an overview of related context and timelines, or call clip_caption_search_wtime_tool for event-related queries to get a rough context and timelines, or call entity_search_tool for entity-related queries.
- When you cannot locate the needed context from scene or entity tools, use clip_caption_search_wtime_tool or clip_visual_search_wtime_tool to expand your search.
- If the retrieved material by clip_caption_search_wtime_tool lacks relevant contexts, further call clip_visual_search_wtime_tool for more fine-grained search.
- If the retrieved material lacks precise, question-relevant detail (e.g., an unknown name, count) or you are uncertain of an answer after searching, call clip_caption_inspect_tool or inspect frames with visual_inspect_tool with a list of time ranges to take a closer look.
- After locating an answer in the script, always make a CONFIRM with visual_inspect_tool query.

HINTS
- Before giving the final answer, confirm critical visual or numeric facts with visual_inspect_tool.
- If you call clip_caption_search_wtime_tool in three consecutive times but still cannot find useful information to answer the question, please try clip_visual_search_wtime_tool to get more detailed information.
- You have at most {max_iterations} iterations of THINK->ACT->OBSERVE; plan strategically. Avoid redundant information retrieval steps.
- To make a good plan to questions that need complex reasoning, sometimes you need to first ask some other related contexts instead of directly asking the target question.
- For questions that need counting the number of times an event occurs over time, call global_scene_browse_tool first. If you are uncertain about its answer, please search for related events or subjects without counting first to find all related information, then do the counting based on observations.
- Your final answer must be concise and directly address the question.
)";

constexpr std::string_view kTruncatedMarker = "[observation truncated]";

std::string render_step(const MemoryEntry& e, std::size_t number, bool truncated) {
    std::string out = fmt::format("[step {}]", number);
    if (!e.thought.empty())
        out += fmt::format("\nthought: {}", e.thought);
    out += fmt::format("\ntool: {}\narguments: {}\nobservation:\n{}", e.tool, e.arguments.dump(),
                       truncated ? std::string(kTruncatedMarker) : e.observation);
    if (!e.timestamps.empty()) {
        out += "\ntimestamps: ";
        for (std::size_t i = 0; i < e.timestamps.size(); ++i) {
            if (i > 0)
                out += ", ";
            out += render_span(e.timestamps[i]);
        }
    }
    return out;
}

nlohmann::json ranges_to_json(const std::vector<TimeRange>& ranges) {
    nlohmann::json out = nlohmann::json::array();
    for (const TimeRange& r : ranges) {
        long start = static_cast<long>(r.start_s);
        long end = static_cast<long>(r.end_s);
        out.push_back({render_timecode(start), render_timecode(end)});
    }
    return out;
}

std::vector<TimeRange> ranges_from_json(const nlohmann::json& arr) {
    std::vector<TimeRange> out;
    for (const auto& pair : arr)
        out.push_back(parse_span(pair[0].get<std::string>(), pair[1].get<std::string>()));
    return out;
}

} // namespace

ContextMemory::ContextMemory(std::string global_summary, std::string question,
                             std::size_t char_budget)
    : global_summary_(std::move(global_summary)), question_(std::move(question)),
      char_budget_(char_budget) {}

void ContextMemory::append(MemoryEntry entry) {
    steps_.push_back(std::move(entry));
}

std::string ContextMemory::render() const {
    std::string head = fmt::format("GLOBAL SUMMARY:\n{}\n\nQUESTION:\n{}\n\nPREVIOUS STEPS:",
                                   global_summary_, question_);
    std::vector<std::string> blocks;
    std::size_t total = head.size();
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        blocks.push_back(render_step(steps_[i], i + 1, false));
        total += blocks.back().size() + 1;
    }
    // Oldest observations give way first when the budget is exceeded; the
    // global summary and the question are never trimmed.
    for (std::size_t i = 0; i < steps_.size() && total > char_budget_; ++i) {
        std::size_t before = blocks[i].size();
        blocks[i] = render_step(steps_[i], i + 1, true);
        total -= before - blocks[i].size();
    }
    std::string out = std::move(head);
    if (blocks.empty()) {
        out += "\n(none)";
    } else {
        for (const std::string& b : blocks) {
            out += '\n';
            out += b;
        }
    }
    return out;
}

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::finished: return "finished";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::backend_error: return "backend_error";
    }
    return "backend_error";
}

Termination termination_from_string(std::string_view s) {
    if (s == "finished") return Termination::finished;
    if (s == "budget_exhausted") return Termination::budget_exhausted;
    if (s == "backend_error") return Termination::backend_error;
    throw ParseError(fmt::format("unknown termination \"{}\"", s));
}

AgentRunner::AgentRunner(Toolbox& tools, std::shared_ptr<ChatBackend> reasoner,
                         AgentOptions options)
    : tools_(tools), reasoner_(std::move(reasoner)), options_(options) {}

std::string AgentRunner::planner_system_prompt(std::size_t max_steps) {
    std::string prompt{kPlannerPromptTemplate};
    const std::string placeholder = "{max_iterations}";
    auto pos = prompt.find(placeholder);
    prompt.replace(pos, placeholder.size(), fmt::format("{}", max_steps));
    return prompt;
}

ChatRequest AgentRunner::render_planner_prompt(const ContextMemory& memory) const {
    ChatRequest req;
    req.messages.push_back({"system", planner_system_prompt(options_.max_steps)});
    std::string user = fmt::format(
        "Video duration: {}\n\n{}",
        render_timecode(static_cast<long>(tools_.database().manifest.duration_s)),
        memory.render());
    req.messages.push_back({"user", std::move(user)});
    req.tools = Toolbox::planner_schemas();
    return req;
}

AgentTrace AgentRunner::run(std::string_view question) {
    AgentTrace trace;
    trace.question = std::string(question);
    ContextMemory memory(tools_.database().global_summary, trace.question,
                         options_.memory_char_budget);

    for (std::size_t step = 0; step < options_.max_steps; ++step) {
        ChatRequest req = render_planner_prompt(memory);
        ChatResponse resp;
        try {
            resp = reasoner_->chat(req);
            if (!resp.tool_call || !Toolbox::is_tool_name(resp.tool_call->name)) {
                // One corrective re-prompt, then give up on this run.
                std::string complaint =
                    resp.tool_call
                        ? fmt::format("Unknown tool \"{}\".", resp.tool_call->name)
                        : std::string("Your reply did not call a tool.");
                req.messages.push_back(
                    {"assistant", resp.tool_call ? resp.tool_call->name : resp.text});
                req.messages.push_back(
                    {"user", fmt::format("{} Call exactly one of the offered tools; use finish "
                                         "to deliver the final answer.",
                                         complaint)});
                resp = reasoner_->chat(req);
                if (!resp.tool_call || !Toolbox::is_tool_name(resp.tool_call->name)) {
                    trace.termination = Termination::backend_error;
                    return trace;
                }
            }
        } catch (const BackendUnavailable&) {
            trace.termination = Termination::backend_error;
            return trace;
        }

        const ToolCall& call = *resp.tool_call;
        if (call.name == tool_names::finish) {
            trace.steps.push_back(AgentStep{resp.text, call.name, call.arguments, "", {}});
            trace.final_answer = call.arguments.value("answer", resp.text);
            trace.termination = Termination::finished;
            return trace;
        }

        AgentStep step_record{resp.text, call.name, call.arguments, "", {}};
        try {
            ToolResult result = tools_.invoke(call);
            step_record.observation = std::move(result.response);
            step_record.timestamps = std::move(result.timestamps);
        } catch (const Error& e) {
            // Tool failures become observations; the loop continues.
            step_record.observation = fmt::format("error: {}", e.what());
        }
        memory.append(MemoryEntry{step_record.thought, step_record.tool, step_record.arguments,
                                  step_record.observation, step_record.timestamps});
        trace.steps.push_back(std::move(step_record));
    }

    // Budget exhausted: one forced-answer call over the gathered context.
    try {
        ChatResponse forced =
            reasoner_->chat(prompts::forced_answer_request(memory.render()));
        trace.final_answer = forced.text;
        trace.termination = Termination::budget_exhausted;
    } catch (const BackendUnavailable&) {
        trace.termination = Termination::backend_error;
    }
    return trace;
}

std::string trace_to_jsonl(const AgentTrace& trace) {
    std::string out;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const AgentStep& s = trace.steps[i];
        nlohmann::json record{{"step", i + 1},         {"thought", s.thought},
                              {"tool", s.tool},        {"arguments", s.arguments},
                              {"observation", s.observation},
                              {"timestamps", ranges_to_json(s.timestamps)}};
        out += record.dump();
        out += '\n';
    }
    nlohmann::json tail{{"question", trace.question},
                        {"final_answer", trace.final_answer},
                        {"termination", std::string(to_string(trace.termination))},
                        {"steps", trace.steps.size()}};
    out += tail.dump();
    out += '\n';
    return out;
}

void write_trace(const AgentTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError(fmt::format("cannot write trace {}", path.string()));
    out << trace_to_jsonl(trace);
}

AgentTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError(fmt::format("cannot read trace {}", path.string()));
    AgentTrace trace;
    std::string line;
    bool terminal_seen = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object())
            throw ParseError(fmt::format("{}: malformed trace line", path.string()));
        if (j.contains("termination")) {
            trace.question = j.value("question", "");
            trace.final_answer = j.value("final_answer", "");
            trace.termination = termination_from_string(j["termination"].get<std::string>());
            terminal_seen = true;
            continue;
        }
        AgentStep s;
        s.thought = j.value("thought", "");
        s.tool = j.value("tool", "");
        s.arguments = j.value("arguments", nlohmann::json::object());
        s.observation = j.value("observation", "");
        s.timestamps = ranges_from_json(j.value("timestamps", nlohmann::json::array()));
        trace.steps.push_back(std::move(s));
    }
    if (!terminal_seen)
        throw ParseError(fmt::format("{}: trace has no terminal record", path.string()));
    return trace;
}

std::string render_trace(const AgentTrace& trace) {
    std::string out = fmt::format("question: {}\n", trace.question);
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const AgentStep& s = trace.steps[i];
        out += fmt::format("\n[step {}] {} {}\n", i + 1, s.tool, s.arguments.dump());
        if (!s.thought.empty())
            out += fmt::format("thought: {}\n", s.thought);
        if (!s.observation.empty())
            out += fmt::format("observation:\n{}\n", s.observation);
        if (!s.timestamps.empty()) {
            out += "timestamps: ";
            for (std::size_t t = 0; t < s.timestamps.size(); ++t) {
                if (t > 0)
                    out += ", ";
                out += render_span(s.timestamps[t]);
            }
            out += '\n';
        }
    }
    out += fmt::format("\ntermination: {}\nfinal answer: {}\n", to_string(trace.termination),
                       trace.final_answer);
    return out;
}

} // namespace vix
