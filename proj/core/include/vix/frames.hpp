#pragma once

#include "vix/model.hpp"
#include "vix/time.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace vix {

/// Catalog of extracted frame image files. Frame extraction is an external,
/// user-run step; the directory holds files named `<seconds>.<ext>` at a fixed
/// rate, and everything here snaps requested instants to the nearest file.
class FrameCatalog {
public:
    /// Scans the directory; throws MissingFrames when it does not exist.
    /// Non-numeric file stems are ignored.
    explicit FrameCatalog(const std::filesystem::path& dir);

    bool empty() const { return frames_.empty(); }
    std::size_t size() const { return frames_.size(); }
    const std::vector<FrameRef>& frames() const { return frames_; }

    /// Nearest frame by timestamp (ties resolve to the earlier frame).
    /// Throws MissingFrames on an empty catalog.
    FrameRef nearest(double t) const;

    /// `count` frames sampled uniformly over the window (midpoint rule),
    /// snapped to available files, deduplicated while preserving order.
    std::vector<FrameRef> sample_uniform(const TimeRange& window, std::size_t count) const;

    /// Frames at `fps` over the union of ranges, snapped and deduplicated,
    /// then uniformly thinned (oldest kept first) down to `cap` when the
    /// candidate set is larger. Throws MissingFrames when no frames fall out
    /// of the ranges.
    std::vector<FrameRef> sample_fps(std::span<const TimeRange> ranges, double fps,
                                     std::size_t cap) const;

private:
    std::vector<FrameRef> frames_; // sorted by timestamp
};

/// Keeps `cap` elements at evenly spaced indices, always retaining the first
/// (oldest) element. Returns the input unchanged when it already fits.
std::vector<FrameRef> thin_uniform(std::vector<FrameRef> frames, std::size_t cap);

} // namespace vix
