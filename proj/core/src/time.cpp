#include "vix/time.hpp"

#include "vix/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vix {

namespace {

bool two_digits(std::string_view s) {
    return s.size() == 2 && std::isdigit(static_cast<unsigned char>(s[0])) &&
           std::isdigit(static_cast<unsigned char>(s[1]));
}

int field_value(std::string_view s) {
    return (s[0] - '0') * 10 + (s[1] - '0');
}

} // namespace

long parse_timecode(std::string_view text) {
    if (text.size() != 8 || text[2] != ':' || text[5] != ':')
        throw MalformedTimecode(fmt::format("expected HH:MM:SS, got \"{}\"", text));
    auto hh = text.substr(0, 2);
    auto mm = text.substr(3, 2);
    auto ss = text.substr(6, 2);
    if (!two_digits(hh) || !two_digits(mm) || !two_digits(ss))
        throw MalformedTimecode(fmt::format("expected HH:MM:SS, got \"{}\"", text));
    int h = field_value(hh);
    int m = field_value(mm);
    int s = field_value(ss);
    if (m >= 60 || s >= 60)
        throw MalformedTimecode(fmt::format("minutes/seconds out of range in \"{}\"", text));
    return 3600L * h + 60L * m + s;
}

std::string render_timecode(long seconds) {
    if (seconds < 0 || seconds > 359999)
        throw InputError(fmt::format("timecode {} s outside 00:00:00..99:59:59", seconds));
    long h = seconds / 3600;
    long m = (seconds % 3600) / 60;
    long s = seconds % 60;
    return fmt::format("{:02}:{:02}:{:02}", h, m, s);
}

std::string render_span(const TimeRange& r) {
    long start = static_cast<long>(std::floor(r.start_s));
    long end = static_cast<long>(std::ceil(r.end_s));
    if (end <= start)
        end = start + 1;
    return fmt::format("{}–{}", render_timecode(start), render_timecode(end));
}

TimeRange parse_span(std::string_view start_text, std::string_view end_text) {
    TimeRange r{static_cast<double>(parse_timecode(start_text)),
                static_cast<double>(parse_timecode(end_text))};
    if (!r.valid())
        throw InputError(fmt::format("empty or inverted time range {}..{}", start_text, end_text));
    return r;
}

std::optional<TimeRange> intersect(const TimeRange& a, const TimeRange& b) {
    double lo = std::max(a.start_s, b.start_s);
    double hi = std::min(a.end_s, b.end_s);
    if (lo < hi)
        return TimeRange{lo, hi};
    return std::nullopt;
}

bool intersects(const TimeRange& a, const TimeRange& b) {
    return a.start_s < b.end_s && b.start_s < a.end_s;
}

bool passes_filter(const TimeRange& r, const std::vector<TimeRange>& filter) {
    if (filter.empty())
        return true;
    return std::any_of(filter.begin(), filter.end(),
                       [&](const TimeRange& f) { return intersects(r, f); });
}

} // namespace vix
