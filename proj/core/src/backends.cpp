#include "vix/backends.hpp"

#include "vix/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace vix {

std::string ChatRequest::joined_text() const {
    std::string out;
    for (const ChatMessage& m : messages) {
        out += m.role;
        out += ": ";
        out += m.content;
        out += '\n';
    }
    return out;
}

void check_vision_request(const VisionRequest& req, std::size_t max_frames) {
    if (req.frames.empty())
        throw EmptyPayload("vision request with no frames");
    if (req.frames.size() > max_frames)
        throw FrameBudgetExceeded(
            fmt::format("{} frames exceed the cap of {}", req.frames.size(), max_frames));
}

void check_embedding(const std::vector<float>& v, std::size_t dimension, std::string_view who) {
    if (v.size() != dimension)
        throw DimensionMismatch(
            fmt::format("{} produced dim {} but is pinned to {}", who, v.size(), dimension));
    double norm_sq = 0.0;
    for (float x : v) {
        if (!std::isfinite(x))
            throw BackendUnavailable(fmt::format("{} produced a non-finite value", who));
        norm_sq += static_cast<double>(x) * static_cast<double>(x);
    }
    if (std::abs(norm_sq - 1.0) > 1e-5)
        throw BackendUnavailable(
            fmt::format("{} produced a non-unit vector (|v|^2 = {})", who, norm_sq));
}

} // namespace vix
