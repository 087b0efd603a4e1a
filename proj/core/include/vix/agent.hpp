#pragma once

#include "vix/backends.hpp"
#include "vix/tools.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

/// One think-act-observe step as recorded in memory and traces.
struct MemoryEntry {
    std::string thought;
    std::string tool;
    nlohmann::json arguments;
    std::string observation;
    std::vector<TimeRange> timestamps;
};

/// Append-only reasoning context: the global summary is entry zero, every
/// executed tool call appends one entry. Rendering enforces a character
/// budget by truncating the oldest observations first; the global summary and
/// the question always survive.
class ContextMemory {
public:
    ContextMemory(std::string global_summary, std::string question, std::size_t char_budget);

    void append(MemoryEntry entry);

    const std::string& global_summary() const { return global_summary_; }
    const std::string& question() const { return question_; }
    const std::vector<MemoryEntry>& steps() const { return steps_; }
    /// Entry count including the global summary.
    std::size_t size() const { return steps_.size() + 1; }

    std::string render() const;

private:
    std::string global_summary_;
    std::string question_;
    std::size_t char_budget_;
    std::vector<MemoryEntry> steps_;
};

enum class Termination { finished, budget_exhausted, backend_error };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct AgentStep {
    std::string thought;
    std::string tool;
    nlohmann::json arguments;
    std::string observation;
    std::vector<TimeRange> timestamps;
};

struct AgentTrace {
    std::string question;
    std::vector<AgentStep> steps;
    std::string final_answer;
    Termination termination = Termination::backend_error;
};

struct AgentOptions {
    std::size_t max_steps = 10;
    std::size_t memory_char_budget = 60000;

    static AgentOptions from_build_config(const BuildConfig& c) {
        return AgentOptions{static_cast<std::size_t>(c.max_steps),
                            static_cast<std::size_t>(c.memory_char_budget)};
    }
};

/// Runs the think-act-observe loop: render the planner prompt (global summary
/// prepended), request exactly one tool call, execute it, append the
/// observation, and stop on finish or when the step budget forces a final
/// answer.
class AgentRunner {
public:
    AgentRunner(Toolbox& tools, std::shared_ptr<ChatBackend> reasoner, AgentOptions options);

    /// The planner's system prompt: GOAL, TOOLS, TOOL PREFERENCES, and HINTS
    /// sections, with the iteration budget substituted in.
    static std::string planner_system_prompt(std::size_t max_steps);

    ChatRequest render_planner_prompt(const ContextMemory& memory) const;

    AgentTrace run(std::string_view question);

private:
    Toolbox& tools_;
    std::shared_ptr<ChatBackend> reasoner_;
    AgentOptions options_;
};

/// Trace export: one JSON record per step plus a terminal record carrying the
/// final answer and termination reason.
std::string trace_to_jsonl(const AgentTrace& trace);
void write_trace(const AgentTrace& trace, const std::filesystem::path& path);
AgentTrace read_trace(const std::filesystem::path& path);
std::string render_trace(const AgentTrace& trace);

} // namespace vix
