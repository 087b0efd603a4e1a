#include "vix/store.hpp"

#include "vix/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <queue>

namespace vix {

std::string_view to_string(VectorKind kind) {
    switch (kind) {
    case VectorKind::segment_text: return "segment_text";
    case VectorKind::segment_visual: return "segment_visual";
    case VectorKind::entity_global: return "entity_global";
    case VectorKind::entity_recaption: return "entity_recaption";
    }
    return "unknown";
}

VectorKind vector_kind_from_string(std::string_view s) {
    if (s == "segment_text") return VectorKind::segment_text;
    if (s == "segment_visual") return VectorKind::segment_visual;
    if (s == "entity_global") return VectorKind::entity_global;
    if (s == "entity_recaption") return VectorKind::entity_recaption;
    throw ParseError(fmt::format("unknown vector kind \"{}\"", s));
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size())
        throw DimensionMismatch(
            fmt::format("cosine over dims {} and {}", u.size(), v.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    return dot;
}

bool hit_before(const Hit& a, const Hit& b) {
    if (a.score != b.score)
        return a.score > b.score;
    if (a.range.start_s != b.range.start_s)
        return a.range.start_s < b.range.start_s;
    return a.id.key < b.id.key;
}

void VectorStore::insert(VectorRecord rec) {
    if (rec.vector.empty())
        throw InputError("vector record with empty vector");
    if (rec.time_ranges.empty())
        throw InputError(fmt::format("record {}/{} has no time ranges",
                                     to_string(rec.id.kind), rec.id.key));
    auto dim_it = dims_.find(static_cast<int>(rec.id.kind));
    if (dim_it != dims_.end() && dim_it->second != rec.vector.size())
        throw DimensionMismatch(fmt::format("record {}/{} has dim {} but kind is pinned to {}",
                                            to_string(rec.id.kind), rec.id.key,
                                            rec.vector.size(), dim_it->second));

    double norm_sq = 0.0;
    for (float x : rec.vector) {
        if (!std::isfinite(x))
            throw InputError(fmt::format("non-finite value in record {}/{}",
                                         to_string(rec.id.kind), rec.id.key));
        norm_sq += static_cast<double>(x) * static_cast<double>(x);
    }
    if (norm_sq <= 0.0)
        throw InputError(fmt::format("zero-norm vector in record {}/{}",
                                     to_string(rec.id.kind), rec.id.key));
    // Vectors that are already unit length pass through untouched, so loading
    // a persisted store reproduces it bit for bit.
    if (std::abs(norm_sq - 1.0) > 1e-6) {
        float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
        for (float& x : rec.vector)
            x *= inv;
    }

    auto key = std::make_pair(static_cast<int>(rec.id.kind), rec.id.key);
    if (by_key_.contains(key))
        throw InputError(fmt::format("duplicate record {}/{}", to_string(rec.id.kind), rec.id.key));

    dims_[static_cast<int>(rec.id.kind)] = rec.vector.size();
    by_key_.emplace(std::move(key), records_.size());
    records_.push_back(std::move(rec));
}

Hit VectorStore::make_hit(const VectorRecord& rec, double score) const {
    TimeRange earliest = rec.time_ranges.front();
    for (const TimeRange& r : rec.time_ranges)
        if (r.start_s < earliest.start_s)
            earliest = r;
    return Hit{rec.id, score, earliest, rec.payload};
}

std::vector<Hit> VectorStore::search(std::span<const float> query, VectorKind kind, std::size_t k,
                                     const std::vector<TimeRange>& time_filter) const {
    if (k < 1)
        throw InputError("search requires k >= 1");
    std::size_t dim = dimension(kind);
    if (dim == 0)
        return {};
    if (query.size() != dim)
        throw DimensionMismatch(
            fmt::format("query dim {} vs store dim {} for kind {}", query.size(), dim,
                        to_string(kind)));

    // Bounded best-k selection: a max-heap (worst of the kept hits on top)
    // keyed by the shared total order.
    auto worse = [](const Hit& a, const Hit& b) { return hit_before(a, b); };
    std::priority_queue<Hit, std::vector<Hit>, decltype(worse)> best(worse);
    for (const VectorRecord& rec : records_) {
        if (rec.id.kind != kind)
            continue;
        bool admitted = time_filter.empty() ||
                        std::any_of(rec.time_ranges.begin(), rec.time_ranges.end(),
                                    [&](const TimeRange& r) { return passes_filter(r, time_filter); });
        if (!admitted)
            continue;
        Hit hit = make_hit(rec, cosine(query, rec.vector));
        if (best.size() < k) {
            best.push(std::move(hit));
        } else if (hit_before(hit, best.top())) {
            best.pop();
            best.push(std::move(hit));
        }
    }
    std::vector<Hit> out(best.size());
    for (std::size_t i = best.size(); i-- > 0;) {
        out[i] = best.top();
        best.pop();
    }
    return out;
}

std::vector<Hit> VectorStore::brute_force_search(std::span<const float> query, VectorKind kind,
                                                 std::size_t k,
                                                 const std::vector<TimeRange>& time_filter) const {
    if (k < 1)
        throw InputError("search requires k >= 1");
    std::size_t dim = dimension(kind);
    if (dim == 0)
        return {};
    if (query.size() != dim)
        throw DimensionMismatch(
            fmt::format("query dim {} vs store dim {} for kind {}", query.size(), dim,
                        to_string(kind)));

    std::vector<Hit> all;
    for (const VectorRecord& rec : records_) {
        if (rec.id.kind != kind)
            continue;
        bool admitted = time_filter.empty() ||
                        std::any_of(rec.time_ranges.begin(), rec.time_ranges.end(),
                                    [&](const TimeRange& r) { return passes_filter(r, time_filter); });
        if (!admitted)
            continue;
        all.push_back(make_hit(rec, cosine(query, rec.vector)));
    }
    std::sort(all.begin(), all.end(), hit_before);
    if (all.size() > k)
        all.resize(k);
    return all;
}

std::vector<Hit> VectorStore::rank_keys(std::span<const float> query, VectorKind kind,
                                        const std::vector<std::string>& keys,
                                        std::size_t k) const {
    if (k < 1)
        throw InputError("rank_keys requires k >= 1");
    std::vector<Hit> all;
    for (const std::string& key : keys) {
        const VectorRecord* rec = find(kind, key);
        if (rec == nullptr)
            continue;
        all.push_back(make_hit(*rec, cosine(query, rec->vector)));
    }
    std::sort(all.begin(), all.end(), hit_before);
    if (all.size() > k)
        all.resize(k);
    return all;
}

const VectorRecord* VectorStore::find(VectorKind kind, std::string_view key) const {
    auto it = by_key_.find(std::make_pair(static_cast<int>(kind), std::string(key)));
    if (it == by_key_.end())
        return nullptr;
    return &records_[it->second];
}

std::size_t VectorStore::dimension(VectorKind kind) const {
    auto it = dims_.find(static_cast<int>(kind));
    return it == dims_.end() ? 0 : it->second;
}

} // namespace vix
