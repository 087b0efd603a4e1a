#pragma once

#include "vix/agent.hpp"
#include "vix/backends.hpp"
#include "vix/model.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vix {

/// One multiple-choice question. Categories follow the benchmark taxonomy:
/// ER, EU, KIR, TG, Rea, Sum, plus "other" for anything else.
struct QAItem {
    std::string id;
    std::string video_id;
    std::string question;
    std::vector<std::pair<std::string, std::string>> options; // label -> text, 2..6 entries
    std::string answer_key;
    std::string category;
};

/// Loads a JSONL QA file:
/// {"id": ..., "video": ..., "question": ..., "options": {"A": ..., ...},
///  "answer": "B", "category": "ER"}.
std::vector<QAItem> load_qa_file(const std::filesystem::path& path);

std::string normalize_category(std::string_view raw);

/// The answer-matching rule: after normalization the answer must contain
/// exactly one of the option labels as a standalone token; anything else is
/// ambiguous and returns "".
std::string normalize_answer_choice(std::string_view answer,
                                    const std::vector<std::string>& labels);

struct ItemOutcome {
    std::size_t item_index = 0;
    std::string item_id;
    std::string category;
    std::string chosen; // "" when no choice could be extracted
    bool correct = false;
    std::size_t iterations = 0;
    std::string termination;
    std::string trace_file; // file name inside the trace directory
    std::string error;      // per-item failure, counted incorrect
};

struct CategoryStats {
    std::size_t total = 0;
    std::size_t correct = 0;
    double iterations_sum = 0.0;

    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
    double mean_iterations() const {
        return total == 0 ? 0.0 : iterations_sum / static_cast<double>(total);
    }
};

struct EvalReport {
    std::vector<ItemOutcome> items;
    std::map<std::string, CategoryStats> categories;
    std::size_t total = 0;
    std::size_t correct = 0;

    double overall_accuracy() const {
        return total == 0 ? 0.0 : static_cast<double>(correct) / total;
    }
    double overall_mean_iterations() const;
    nlohmann::json to_json() const;
};

struct EvalOptions {
    int workers = 4;
    std::filesystem::path trace_dir; // empty: traces are not written
    std::optional<AgentOptions> agent;
    std::optional<ToolConfig> tools;
};

/// Resolves a video id to its loaded index; must be safe to call from
/// multiple workers.
using IndexProvider = std::function<const IndexDatabase&(const std::string& video_id)>;

/// Answers every item through the agent loop, matches the finish answer
/// against the key (one clarification chat when ambiguous), and aggregates
/// per-category accuracy and mean iterations. Per-item failures count as
/// incorrect and carry the error text.
EvalReport run_eval(const std::vector<QAItem>& items, const IndexProvider& provider,
                    const BackendSet& backends, const EvalOptions& options);

/// Fixed-order accuracy/iteration table in the benchmark's six-column shape.
std::string render_report_table(const EvalReport& report);

} // namespace vix
