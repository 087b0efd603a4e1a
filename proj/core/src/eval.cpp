#include "vix/eval.hpp"

#include "vix/errors.hpp"
#include "vix/parallel.hpp"
#include "vix/prompts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>

namespace vix {

namespace {

const std::vector<std::string>& canonical_categories() {
    static const std::vector<std::string> cats = {"ER", "EU", "KIR", "TG", "Rea", "Sum", "other"};
    return cats;
}

bool valid_label(const std::string& label) {
    return label.size() == 1 && label[0] >= 'A' && label[0] <= 'F';
}

} // namespace

std::string normalize_category(std::string_view raw) {
    std::string lower;
    for (char c : raw)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "er") return "ER";
    if (lower == "eu") return "EU";
    if (lower == "kir") return "KIR";
    if (lower == "tg") return "TG";
    if (lower == "rea" || lower == "reasoning") return "Rea";
    if (lower == "sum" || lower == "summarization") return "Sum";
    if (lower == "other") return "other";
    throw ParseError(fmt::format("unknown question category \"{}\"", raw));
}

std::vector<QAItem> load_qa_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(fmt::format("cannot open QA file {}", path.string()));
    std::vector<QAItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object())
            throw ParseError(fmt::format("{}:{}: not a JSON object", path.string(), line_no));
        QAItem item;
        item.id = j.value("id", fmt::format("item_{}", items.size()));
        item.video_id = j.value("video", "");
        item.question = j.value("question", "");
        if (item.question.empty())
            throw ParseError(fmt::format("{}:{}: missing question", path.string(), line_no));
        if (!j.contains("options") || !j["options"].is_object())
            throw ParseError(
                fmt::format("{}:{}: options must be a label->text object", path.string(), line_no));
        for (const auto& [label, text] : j["options"].items()) {
            if (!valid_label(label))
                throw ParseError(fmt::format("{}:{}: option label \"{}\" is not A..F",
                                             path.string(), line_no, label));
            item.options.emplace_back(label, text.get<std::string>());
        }
        if (item.options.size() < 2 || item.options.size() > 6)
            throw ParseError(
                fmt::format("{}:{}: expected 2..6 options", path.string(), line_no));
        item.answer_key = j.value("answer", "");
        bool key_known = std::any_of(item.options.begin(), item.options.end(),
                                     [&](const auto& o) { return o.first == item.answer_key; });
        if (!key_known)
            throw ParseError(fmt::format("{}:{}: answer key \"{}\" is not an option label",
                                         path.string(), line_no, item.answer_key));
        item.category = normalize_category(j.value("category", "other"));
        items.push_back(std::move(item));
    }
    return items;
}

std::string normalize_answer_choice(std::string_view answer,
                                    const std::vector<std::string>& labels) {
    std::string found;
    for (const std::string& label : labels) {
        char want = label[0];
        for (std::size_t i = 0; i < answer.size(); ++i) {
            if (std::toupper(static_cast<unsigned char>(answer[i])) != want)
                continue;
            bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(answer[i - 1]));
            bool right_ok = i + 1 == answer.size() ||
                            !std::isalnum(static_cast<unsigned char>(answer[i + 1]));
            if (!left_ok || !right_ok)
                continue;
            if (!found.empty() && found != label)
                return ""; // more than one distinct label present
            found = label;
            break;
        }
    }
    return found;
}

double EvalReport::overall_mean_iterations() const {
    double sum = 0.0;
    for (const auto& [cat, stats] : categories)
        sum += stats.iterations_sum;
    return total == 0 ? 0.0 : sum / static_cast<double>(total);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [cat, stats] : categories)
        cats[cat] = {{"total", stats.total},
                     {"correct", stats.correct},
                     {"accuracy", stats.accuracy()},
                     {"mean_iterations", stats.mean_iterations()}};
    nlohmann::json item_list = nlohmann::json::array();
    for (const ItemOutcome& o : items)
        item_list.push_back({{"index", o.item_index},
                             {"id", o.item_id},
                             {"category", o.category},
                             {"chosen", o.chosen},
                             {"correct", o.correct},
                             {"iterations", o.iterations},
                             {"termination", o.termination},
                             {"trace_file", o.trace_file},
                             {"error", o.error}});
    return {{"overall",
             {{"total", total},
              {"correct", correct},
              {"accuracy", overall_accuracy()},
              {"mean_iterations", overall_mean_iterations()}}},
            {"categories", cats},
            {"items", item_list}};
}

EvalReport run_eval(const std::vector<QAItem>& items, const IndexProvider& provider,
                    const BackendSet& backends, const EvalOptions& options) {
    if (!options.trace_dir.empty())
        std::filesystem::create_directories(options.trace_dir);

    std::vector<ItemOutcome> outcomes(items.size());
    parallel_for(items.size(), options.workers, [&](std::size_t i) {
        const QAItem& item = items[i];
        ItemOutcome out;
        out.item_index = i;
        out.item_id = item.id;
        out.category = item.category;
        try {
            const IndexDatabase& db = provider(item.video_id);
            Toolbox toolbox(db, backends,
                            options.tools.value_or(ToolConfig::from_build_config(db.config)));
            AgentRunner runner(toolbox, backends.reasoner,
                               options.agent.value_or(AgentOptions::from_build_config(db.config)));
            AgentTrace trace = runner.run(item.question);
            out.iterations = trace.steps.size();
            out.termination = std::string(to_string(trace.termination));

            std::vector<std::string> labels;
            for (const auto& [label, text] : item.options)
                labels.push_back(label);
            out.chosen = normalize_answer_choice(trace.final_answer, labels);
            if (out.chosen.empty()) {
                // One clarification round for ambiguous answers.
                ChatResponse clarified = backends.reasoner->chat(prompts::clarify_answer_request(
                    item.question, item.options, trace.final_answer));
                out.chosen = normalize_answer_choice(clarified.text, labels);
            }
            out.correct = !out.chosen.empty() && out.chosen == item.answer_key;

            if (!options.trace_dir.empty()) {
                out.trace_file = fmt::format("item_{:04}.trace.jsonl", i);
                write_trace(trace, options.trace_dir / out.trace_file);
            }
        } catch (const Error& e) {
            out.error = e.what();
            out.correct = false;
            out.termination = "backend_error";
        }
        outcomes[i] = std::move(out);
    });

    EvalReport report;
    report.items = std::move(outcomes);
    for (const ItemOutcome& o : report.items) {
        CategoryStats& stats = report.categories[o.category];
        ++stats.total;
        stats.iterations_sum += static_cast<double>(o.iterations);
        if (o.correct)
            ++stats.correct;
        ++report.total;
        if (o.correct)
            ++report.correct;
    }
    return report;
}

std::string render_report_table(const EvalReport& report) {
    std::vector<std::string> cols;
    for (const std::string& cat : canonical_categories()) {
        if (cat == "other" && !report.categories.contains(cat))
            continue;
        cols.push_back(cat);
    }
    std::string head = fmt::format("{:<6}", "");
    std::string acc = fmt::format("{:<6}", "acc");
    std::string iter = fmt::format("{:<6}", "iter");
    std::string count = fmt::format("{:<6}", "items");
    for (const std::string& cat : cols) {
        head += fmt::format("{:>9}", cat);
        auto it = report.categories.find(cat);
        if (it == report.categories.end() || it->second.total == 0) {
            acc += fmt::format("{:>9}", "-");
            iter += fmt::format("{:>9}", "-");
            count += fmt::format("{:>9}", 0);
        } else {
            acc += fmt::format("{:>9.3f}", it->second.accuracy());
            iter += fmt::format("{:>9.2f}", it->second.mean_iterations());
            count += fmt::format("{:>9}", it->second.total);
        }
    }
    head += fmt::format("{:>9}", "Overall");
    acc += fmt::format("{:>9.3f}", report.overall_accuracy());
    iter += fmt::format("{:>9.2f}", report.overall_mean_iterations());
    count += fmt::format("{:>9}", report.total);
    return fmt::format("{}\n{}\n{}\n{}\n", head, acc, iter, count);
}

} // namespace vix
