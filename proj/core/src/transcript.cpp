#include "vix/transcript.hpp"

#include "vix/errors.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>

namespace vix {

namespace {

nlohmann::json parse_line(const std::string& line, const std::filesystem::path& path,
                          std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError(fmt::format("{}:{}: not a JSON object", path.string(), line_no));
    return j;
}

double seconds_field(const nlohmann::json& j, const char* field,
                     const std::filesystem::path& path, std::size_t line_no) {
    if (!j.contains(field) || !j[field].is_number())
        throw ParseError(
            fmt::format("{}:{}: field \"{}\" missing or not a number", path.string(), line_no, field));
    double v = j[field].get<double>();
    if (v < 0.0 || !std::isfinite(v))
        throw ParseError(
            fmt::format("{}:{}: field \"{}\" is not a valid timestamp", path.string(), line_no, field));
    return v;
}

} // namespace

std::vector<SpeakerTurn> load_diarized_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(fmt::format("cannot open transcript {}", path.string()));
    std::vector<SpeakerTurn> turns;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json j = parse_line(line, path, line_no);
        SpeakerTurn turn;
        turn.range.start_s = seconds_field(j, "start", path, line_no);
        turn.range.end_s = seconds_field(j, "end", path, line_no);
        if (!turn.range.valid())
            throw ParseError(
                fmt::format("{}:{}: start must precede end", path.string(), line_no));
        if (!j.contains("speaker") || !j["speaker"].is_string() ||
            j["speaker"].get<std::string>().empty())
            throw ParseError(
                fmt::format("{}:{}: field \"speaker\" missing or empty", path.string(), line_no));
        turn.speaker = j["speaker"].get<std::string>();
        turn.text = j.value("text", std::string{});
        turns.push_back(std::move(turn));
    }
    std::stable_sort(turns.begin(), turns.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
        return a.range.start_s < b.range.start_s;
    });
    return turns;
}

std::string transcript_language(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(fmt::format("cannot open transcript {}", path.string()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json j = parse_line(line, path, line_no);
        if (j.contains("language") && j["language"].is_string())
            return j["language"].get<std::string>();
    }
    return "";
}

bool is_english_tag(std::string_view tag) {
    if (tag.empty())
        return true; // undeclared language is taken as usable
    std::string lower;
    lower.reserve(tag.size());
    for (char c : tag)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "en" || lower == "eng" || lower == "english" || lower.starts_with("en-") ||
           lower.starts_with("en_");
}

} // namespace vix
