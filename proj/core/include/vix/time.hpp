#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

/// Half-open time window [start_s, end_s) in seconds from the start of the video.
/// Half-open ranges make segment partitions exact: no boundary instant belongs
/// to two segments.
struct TimeRange {
    double start_s = 0.0;
    double end_s = 0.0;

    double length() const { return end_s - start_s; }
    bool valid() const { return start_s >= 0.0 && start_s < end_s; }
    bool contains(double t) const { return t >= start_s && t < end_s; }

    friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

/// Parses zero-padded "HH:MM:SS" wall-clock text into whole seconds.
/// Throws MalformedTimecode on any other shape (including MM or SS >= 60).
long parse_timecode(std::string_view text);

/// Renders whole seconds as zero-padded "HH:MM:SS". Valid for 0..359999
/// (99:59:59); throws InputError outside that range.
std::string render_timecode(long seconds);

/// "HH:MM:SS–HH:MM:SS" for display. Fractional seconds are floored; a range
/// shorter than one second still renders distinct endpoints via ceil on end.
std::string render_span(const TimeRange& r);

/// Builds a TimeRange from two "HH:MM:SS" strings; throws MalformedTimecode
/// on bad text and InputError when start >= end.
TimeRange parse_span(std::string_view start_text, std::string_view end_text);

/// Overlap of two half-open ranges, or nullopt when they only touch or are
/// disjoint. Commutative, and idempotent on equal inputs.
std::optional<TimeRange> intersect(const TimeRange& a, const TimeRange& b);

bool intersects(const TimeRange& a, const TimeRange& b);

/// True when r overlaps at least one range in filter. An empty filter means
/// "no restriction" and accepts everything.
bool passes_filter(const TimeRange& r, const std::vector<TimeRange>& filter);

} // namespace vix
