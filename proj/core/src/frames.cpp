#include "vix/frames.hpp"

#include "vix/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace vix {

namespace {

bool parse_seconds(const std::string& stem, double& out) {
    const char* begin = stem.data();
    const char* end = begin + stem.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end && out >= 0.0;
}

} // namespace

FrameCatalog::FrameCatalog(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw MissingFrames(fmt::format("frames directory {} does not exist", dir.string()));
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        double t = 0.0;
        if (!parse_seconds(entry.path().stem().string(), t))
            continue;
        frames_.push_back(FrameRef{t, entry.path().string()});
    }
    std::sort(frames_.begin(), frames_.end(), [](const FrameRef& a, const FrameRef& b) {
        if (a.timestamp_s != b.timestamp_s)
            return a.timestamp_s < b.timestamp_s;
        return a.path < b.path;
    });
}

FrameRef FrameCatalog::nearest(double t) const {
    if (frames_.empty())
        throw MissingFrames("frame catalog is empty");
    auto it = std::lower_bound(frames_.begin(), frames_.end(), t,
                               [](const FrameRef& f, double v) { return f.timestamp_s < v; });
    if (it == frames_.end())
        return frames_.back();
    if (it == frames_.begin())
        return frames_.front();
    auto prev = std::prev(it);
    double d_prev = t - prev->timestamp_s;
    double d_next = it->timestamp_s - t;
    return d_prev <= d_next ? *prev : *it;
}

std::vector<FrameRef> FrameCatalog::sample_uniform(const TimeRange& window,
                                                   std::size_t count) const {
    if (count == 0)
        return {};
    std::vector<FrameRef> out;
    double step = window.length() / static_cast<double>(count);
    for (std::size_t j = 0; j < count; ++j) {
        FrameRef f = nearest(window.start_s + (static_cast<double>(j) + 0.5) * step);
        if (out.empty() || out.back().path != f.path)
            out.push_back(std::move(f));
    }
    return out;
}

std::vector<FrameRef> FrameCatalog::sample_fps(std::span<const TimeRange> ranges, double fps,
                                               std::size_t cap) const {
    if (fps <= 0.0)
        throw InputError("sample_fps requires a positive rate");
    if (frames_.empty())
        throw MissingFrames("frame catalog is empty");
    double step = 1.0 / fps;
    std::vector<FrameRef> candidates;
    for (const TimeRange& r : ranges) {
        for (double t = std::ceil(r.start_s / step) * step; t < r.end_s; t += step) {
            FrameRef f = nearest(t);
            // Snapping must not escape the requested ranges.
            if (!r.contains(f.timestamp_s))
                continue;
            if (candidates.empty() || candidates.back().path != f.path)
                candidates.push_back(std::move(f));
        }
    }
    if (candidates.empty())
        throw MissingFrames("no frames inside the requested time ranges");
    return thin_uniform(std::move(candidates), cap);
}

std::vector<FrameRef> thin_uniform(std::vector<FrameRef> frames, std::size_t cap) {
    if (cap == 0 || frames.size() <= cap)
        return frames;
    std::vector<FrameRef> out;
    out.reserve(cap);
    for (std::size_t j = 0; j < cap; ++j)
        out.push_back(frames[j * frames.size() / cap]);
    return out;
}

} // namespace vix
