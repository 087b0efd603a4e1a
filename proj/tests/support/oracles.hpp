#pragma once

#include "vix/entities.hpp"
#include "vix/model.hpp"

#include <set>
#include <vector>

namespace vixtest {

/// Independent O(n^3) reference for greedy agglomerative clustering: rebuilds
/// the full centroid-similarity matrix from scratch each iteration, merges the
/// best pair at or above the threshold (ties toward lower mention ids), stops
/// when none qualifies. Returns the member-id partition, ordered by minimum
/// member id.
std::vector<std::set<std::size_t>> reference_agglomerative(
    const std::vector<vix::EntityMention>& mentions, double threshold);

/// Partition produced by a clustering result, for comparison.
std::vector<std::set<std::size_t>> partition_of(const std::vector<vix::EntityCluster>& clusters);

/// Union-find oracle for speaker-priority merging: connected components over
/// character entities sharing at least one speaker label. Returns the groups
/// as sets of input indices, ordered by minimum index; singleton non-character
/// entities appear as their own groups.
std::vector<std::set<std::size_t>> reference_speaker_components(
    const std::vector<vix::CanonicalEntity>& entities);

} // namespace vixtest
