#pragma once

#include "vix/time.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vix {

enum class VectorKind { segment_text, segment_visual, entity_global, entity_recaption };

std::string_view to_string(VectorKind kind);
VectorKind vector_kind_from_string(std::string_view s);

struct RecordId {
    VectorKind kind;
    std::string key;

    friend bool operator==(const RecordId&, const RecordId&) = default;
};

/// One retrievable embedding. Vectors are re-normalized on insert so cosine
/// similarity reduces to a dot product and ties stay stable.
struct VectorRecord {
    RecordId id;
    std::vector<float> vector;
    std::vector<TimeRange> time_ranges; // segment span(s) backing this record
    std::string payload;                // display text for tool responses

    friend bool operator==(const VectorRecord&, const VectorRecord&) = default;
};

struct Hit {
    RecordId id;
    double score = 0.0; // cosine similarity in [-1, 1]
    TimeRange range;    // earliest time range of the record
    std::string payload;
};

/// Dot product over equal-dimension vectors; with unit-normalized inputs this
/// is the cosine similarity. Throws DimensionMismatch otherwise.
double cosine(std::span<const float> u, std::span<const float> v);

/// Result ordering: score desc, then range start asc, then key asc. Keys are
/// unique per kind, so the order is total and deterministic.
bool hit_before(const Hit& a, const Hit& b);

/// Stores text/visual/entity embeddings and serves top-k cosine retrieval with
/// time-range filtering. Retrieval is an exact linear scan; an index built for
/// one video holds at most a few thousand records. Immutable once built:
/// inserts happen only in the single-writer build phase, after which any
/// number of readers may search concurrently.
class VectorStore {
public:
    /// Re-normalizes and stores a record. Throws InputError on duplicate
    /// (kind, key), empty time ranges, or a zero-norm vector, and
    /// DimensionMismatch when the dimension disagrees with earlier records of
    /// the same kind.
    void insert(VectorRecord rec);

    /// Top-k hits for the query among records of `kind` whose time ranges
    /// intersect the filter (empty filter = whole video). Returns fewer than k
    /// when the filter admits fewer records; an empty store yields an empty
    /// list. Throws DimensionMismatch when the query dimension disagrees.
    std::vector<Hit> search(std::span<const float> query, VectorKind kind, std::size_t k,
                            const std::vector<TimeRange>& time_filter = {}) const;

    /// Reference implementation of the same contract as `search`: full linear
    /// scan, full sort, truncate. Kept as the ranking oracle.
    std::vector<Hit> brute_force_search(std::span<const float> query, VectorKind kind,
                                        std::size_t k,
                                        const std::vector<TimeRange>& time_filter = {}) const;

    /// Ranks an explicit candidate subset (by key) of one kind against the
    /// query. Used by two-stage entity retrieval.
    std::vector<Hit> rank_keys(std::span<const float> query, VectorKind kind,
                               const std::vector<std::string>& keys, std::size_t k) const;

    const VectorRecord* find(VectorKind kind, std::string_view key) const;
    const std::vector<VectorRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    /// Dimension pinned by the first insert of this kind; 0 when none stored.
    std::size_t dimension(VectorKind kind) const;

    friend bool operator==(const VectorStore& a, const VectorStore& b) {
        return a.records_ == b.records_;
    }

private:
    Hit make_hit(const VectorRecord& rec, double score) const;

    std::vector<VectorRecord> records_;
    std::map<std::pair<int, std::string>, std::size_t> by_key_;
    std::map<int, std::size_t> dims_;
};

} // namespace vix
