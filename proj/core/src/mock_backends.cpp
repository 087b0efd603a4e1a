#include "vix/mock_backends.hpp"

#include "vix/errors.hpp"
#include "vix/prompts.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>

namespace vix {

namespace {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void l2_normalize(std::vector<float>& v) {
    double norm_sq = 0.0;
    for (float x : v)
        norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (norm_sq <= 0.0)
        return;
    float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (float& x : v)
        x *= inv;
}

/// Value of the first line starting with `prefix`, or nullopt.
std::optional<std::string> find_line_value(std::string_view text, std::string_view prefix) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        if (line.starts_with(prefix))
            return std::string(line.substr(prefix.size()));
        if (eol == std::string_view::npos)
            break;
        pos = eol + 1;
    }
    return std::nullopt;
}

std::vector<std::string> split_list(std::string_view csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string_view item = csv.substr(pos, comma == std::string_view::npos ? comma : comma - pos);
        while (!item.empty() && item.front() == ' ')
            item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ')
            item.remove_suffix(1);
        if (!item.empty())
            out.emplace_back(item);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

std::vector<std::string> speakers_in_prompt(std::string_view text) {
    auto line = find_line_value(text, "Speakers: ");
    if (!line || *line == "(none)")
        return {};
    return split_list(*line);
}

std::string synth_caption_json(std::string_view prompt) {
    auto window = find_line_value(prompt, "Window: ").value_or("the segment");
    auto speakers = speakers_in_prompt(prompt);
    std::string caption = fmt::format("View of the video during {}.", window);
    std::string info;
    for (const std::string& s : speakers) {
        if (!info.empty())
            info += ' ';
        info += fmt::format("{} is visible on screen while speaking.", s);
    }
    nlohmann::json j{{"caption", caption}, {"speaker_info", info}};
    return j.dump();
}

std::string synth_entities_json(std::string_view prompt) {
    nlohmann::json entities = nlohmann::json::array();
    for (const std::string& s : speakers_in_prompt(prompt))
        entities.push_back({{"name", s},
                            {"category", "character"},
                            {"description", fmt::format("{} speaks during this segment.", s)}});
    return nlohmann::json{{"entities", entities}}.dump();
}

std::string synth_canonicalize_json(std::string_view prompt) {
    static const std::regex member_re(R"(^(\d+)\. (.*) \((\w+)\): (.*)$)");
    nlohmann::json members = nlohmann::json::array();
    std::string name;
    std::vector<std::string> descs;
    std::size_t pos = 0;
    std::string text(prompt);
    std::smatch m;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!std::regex_match(line, m, member_re))
            continue;
        members.push_back(std::stoul(m[1].str()));
        if (name.empty())
            name = m[2].str();
        std::string d = m[4].str();
        if (std::find(descs.begin(), descs.end(), d) == descs.end())
            descs.push_back(d);
    }
    (void)pos;
    std::string desc;
    for (const std::string& d : descs) {
        if (!desc.empty())
            desc += "; ";
        desc += d;
    }
    nlohmann::json group{{"name", name}, {"description", desc}, {"members", members}};
    return nlohmann::json{{"groups", nlohmann::json::array({group})}}.dump();
}

std::string synth_merge_text(std::string_view prompt) {
    std::string out;
    std::istringstream in{std::string(prompt)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.starts_with("- "))
            continue;
        if (!out.empty())
            out += "; ";
        out += line.substr(2);
    }
    return out.empty() ? "Merged entity." : out;
}

std::string synth_recaption_text(std::string_view prompt) {
    auto entity = find_line_value(prompt, "Entity: ").value_or("the entity");
    auto window = find_line_value(prompt, "Window: ").value_or("this window");
    return fmt::format("During {}, {} is present and active.", window, entity);
}

std::string synth_scene_summary_text(std::string_view prompt) {
    auto span = find_line_value(prompt, "Span: ").value_or("an unknown span");
    return fmt::format("Scene covering {}.", span);
}

std::string synth_global_summary_text(std::string_view prompt) {
    auto header = find_line_value(prompt, "Scene summaries (").value_or("?):");
    auto count = header.substr(0, header.find(')'));
    auto first = find_line_value(prompt, "- ").value_or("");
    return fmt::format("Overview across {} scenes. Opening: {}", count, first);
}

std::string synth_scene_browse_json(std::string_view prompt) {
    static const std::regex scene_re(R"(^Scene (\d+) \[(.*)\]: (.*)$)");
    std::istringstream in{std::string(prompt)};
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (std::regex_match(line, m, scene_re)) {
            nlohmann::json j{{"scene_ids", {std::stoul(m[1].str())}},
                             {"storyline", fmt::format("[{}] {}", m[2].str(), m[3].str())}};
            return j.dump();
        }
    }
    return nlohmann::json{{"scene_ids", nlohmann::json::array()}, {"storyline", ""}}.dump();
}

std::string synth_clarify_text(std::string_view prompt) {
    static const std::regex option_re(R"(^([A-F])\. )");
    std::istringstream in{std::string(prompt)};
    std::string line;
    std::smatch m;
    while (std::getline(in, line))
        if (std::regex_search(line, m, option_re))
            return m[1].str();
    return "A";
}

std::optional<ChatResponse> apply_rules(std::vector<PlaybookRule>& rules, std::string_view text) {
    for (PlaybookRule& rule : rules) {
        if (rule.used)
            continue;
        if (!rule.contains.empty() && text.find(rule.contains) == std::string_view::npos)
            continue;
        if (rule.once)
            rule.used = true;
        if (rule.tool)
            return ChatResponse{rule.text.value_or(""), rule.tool};
        return ChatResponse{rule.text.value_or(""), std::nullopt};
    }
    return std::nullopt;
}

PlaybookRule rule_from_json(const nlohmann::json& j) {
    PlaybookRule rule;
    rule.contains = j.value("contains", std::string{});
    if (j.contains("text"))
        rule.text = j["text"].get<std::string>();
    if (j.contains("tool"))
        rule.tool = ToolCall{j["tool"].get<std::string>(), j.value("arguments", nlohmann::json::object())};
    rule.once = j.value("once", false);
    return rule;
}

} // namespace

std::vector<float> hash_embed_tokens(std::string_view text, std::size_t dim, std::uint64_t salt) {
    std::vector<float> acc(dim, 0.0f);
    std::size_t tokens = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
        std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos == start)
            continue;
        std::uint64_t h = fnv1a64(text.substr(start, pos - start), salt);
        float sign = ((h >> 32) & 1U) != 0U ? 1.0f : -1.0f;
        acc[h % dim] += sign;
        ++tokens;
    }
    if (tokens == 0)
        return acc;
    for (float& x : acc)
        x /= static_cast<float>(tokens);
    l2_normalize(acc);
    return acc;
}

HashTextEmbedder::HashTextEmbedder(std::size_t dim, std::uint64_t salt) : dim_(dim), salt_(salt) {}

std::vector<float> HashTextEmbedder::embed_text(std::string_view text) {
    if (text.empty())
        throw EmptyPayload("embed_text over empty text");
    auto v = hash_embed_tokens(text, dim_, salt_);
    double norm = 0.0;
    for (float x : v)
        norm += x * x;
    if (norm == 0.0)
        throw EmptyPayload("embed_text over whitespace-only text");
    check_embedding(v, dim_, "HashTextEmbedder");
    return v;
}

HashVisualEmbedder::HashVisualEmbedder(std::size_t dim, std::uint64_t salt)
    : dim_(dim), salt_(salt) {}

std::vector<float> HashVisualEmbedder::embed_frames(const std::vector<FrameRef>& frames) {
    if (frames.empty())
        throw EmptyPayload("embed_frames over empty frame list");
    std::vector<float> acc(dim_, 0.0f);
    for (const FrameRef& f : frames) {
        std::filesystem::path p(f.path);
        auto per_frame = hash_embed_tokens(p.filename().string(), dim_, salt_);
        for (std::size_t i = 0; i < dim_; ++i)
            acc[i] += per_frame[i];
    }
    for (float& x : acc)
        x /= static_cast<float>(frames.size());
    l2_normalize(acc);
    check_embedding(acc, dim_, "HashVisualEmbedder");
    return acc;
}

std::vector<float> HashVisualEmbedder::embed_query(std::string_view text) {
    if (text.empty())
        throw EmptyPayload("embed_query over empty text");
    auto v = hash_embed_tokens(text, dim_, salt_);
    check_embedding(v, dim_, "HashVisualEmbedder");
    return v;
}

Playbook Playbook::from_json(const nlohmann::json& j) {
    Playbook pb;
    for (const auto& r : j.value("chat_rules", nlohmann::json::array()))
        pb.chat_rules.push_back(rule_from_json(r));
    for (const auto& r : j.value("vision_rules", nlohmann::json::array()))
        pb.vision_rules.push_back(rule_from_json(r));
    return pb;
}

Playbook Playbook::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError(fmt::format("cannot open playbook {}", path.string()));
    nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
        throw ParseError(fmt::format("playbook {} is not valid JSON", path.string()));
    return from_json(j);
}

void ScriptedChat::push_text(std::string text) {
    std::scoped_lock lock(mu_);
    queue_.push_back(ChatResponse{std::move(text), std::nullopt});
}

void ScriptedChat::push_tool(ToolCall call) {
    std::scoped_lock lock(mu_);
    queue_.push_back(ChatResponse{"", std::move(call)});
}

void ScriptedChat::push(ChatResponse response) {
    std::scoped_lock lock(mu_);
    queue_.push_back(std::move(response));
}

ChatResponse ScriptedChat::chat(const ChatRequest& req) {
    if (req.messages.empty())
        throw EmptyPayload("chat request with no messages");
    std::scoped_lock lock(mu_);
    requests_.push_back(req);
    if (queue_.empty())
        throw BackendUnavailable("scripted chat queue exhausted");
    ChatResponse r = std::move(queue_.front());
    queue_.pop_front();
    return r;
}

std::vector<ChatRequest> ScriptedChat::requests() const {
    std::scoped_lock lock(mu_);
    return requests_;
}

MockModelChat::MockModelChat(Playbook playbook) : playbook_(std::move(playbook)) {}

ChatResponse MockModelChat::chat(const ChatRequest& req) {
    if (req.messages.empty())
        throw EmptyPayload("chat request with no messages");
    std::string text = req.joined_text();
    std::scoped_lock lock(mu_);
    requests_.push_back(req);
    if (auto scripted = apply_rules(playbook_.chat_rules, text))
        return *scripted;

    if (!req.tools.empty())
        return ChatResponse{"", ToolCall{"finish", {{"answer", "UNKNOWN"}}}};

    auto task = prompts::request_task(req);
    std::string_view user = req.messages.back().content;
    if (!task)
        return ChatResponse{"OK", std::nullopt};
    if (*task == prompts::task::entity_extraction)
        return ChatResponse{synth_entities_json(user), std::nullopt};
    if (*task == prompts::task::entity_canonicalization)
        return ChatResponse{synth_canonicalize_json(user), std::nullopt};
    if (*task == prompts::task::entity_merge)
        return ChatResponse{synth_merge_text(user), std::nullopt};
    if (*task == prompts::task::entity_recaption)
        return ChatResponse{synth_recaption_text(user), std::nullopt};
    if (*task == prompts::task::scene_boundaries)
        return ChatResponse{R"({"boundaries": []})", std::nullopt};
    if (*task == prompts::task::scene_summary)
        return ChatResponse{synth_scene_summary_text(user), std::nullopt};
    if (*task == prompts::task::global_summary)
        return ChatResponse{synth_global_summary_text(user), std::nullopt};
    if (*task == prompts::task::scene_browse)
        return ChatResponse{synth_scene_browse_json(user), std::nullopt};
    if (*task == prompts::task::forced_answer)
        return ChatResponse{"UNKNOWN", std::nullopt};
    if (*task == prompts::task::clarify_answer)
        return ChatResponse{synth_clarify_text(user), std::nullopt};
    return ChatResponse{"OK", std::nullopt};
}

std::vector<ChatRequest> MockModelChat::requests() const {
    std::scoped_lock lock(mu_);
    return requests_;
}

MockVision::MockVision(std::vector<PlaybookRule> rules, std::size_t max_frames)
    : rules_(std::move(rules)), max_frames_(max_frames) {}

std::string MockVision::vision_answer(const VisionRequest& req) {
    check_vision_request(req, max_frames_);
    std::scoped_lock lock(mu_);
    requests_.push_back(req);
    if (auto scripted = apply_rules(rules_, req.prompt)) {
        return scripted->text;
    }
    auto task = prompts::prompt_task(req.prompt);
    if (task && *task == prompts::task::segment_caption)
        return synth_caption_json(req.prompt);
    return fmt::format("Observed {} frames; nothing further stands out.", req.frames.size());
}

std::vector<VisionRequest> MockVision::requests() const {
    std::scoped_lock lock(mu_);
    return requests_;
}

ChatResponse RecordingChat::chat(const ChatRequest& req) {
    ChatResponse res = inner_->chat(req);
    std::scoped_lock lock(mu_);
    exchanges_.push_back(Exchange{req, res});
    return res;
}

std::vector<RecordingChat::Exchange> RecordingChat::exchanges() const {
    std::scoped_lock lock(mu_);
    return exchanges_;
}

} // namespace vix
