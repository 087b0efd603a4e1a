#pragma once

#include "vix/backends.hpp"
#include "vix/model.hpp"
#include "vix/report.hpp"

#include <span>
#include <vector>

namespace vix {

struct EntityCluster {
    std::vector<EntityMention> members;    // sorted by mention_id
    std::vector<float> centroid;           // normalized mean of member embeddings
    std::multiset<std::string> speaker_labels; // labels of the members' segments

    std::size_t min_mention_id() const { return members.front().mention_id; }
};

/// Asks the builder model for the salient subjects of one segment. Empty
/// composed text yields an empty list without a model call. Throws
/// BackendRefusal when the structured list cannot be parsed after one
/// re-prompt. Returned mentions carry the segment index but no embedding yet.
std::vector<EntityMention> extract_entities(const Segment& segment, ChatBackend& builder);

/// Greedy agglomerative clustering: repeatedly merges the pair of clusters
/// with the highest centroid cosine until no pair reaches the threshold.
/// Centroids are recomputed from members (ascending mention id) after every
/// merge; ties break toward the lower mention ids, so the procedure is
/// deterministic under a fixed input order. Expects every mention embedded.
std::vector<EntityCluster> cluster_mentions(std::vector<EntityMention> mentions,
                                            double cosine_threshold);

/// LLM canonicalization of one cluster: a unified entity, or several when the
/// model detects distinct identities sharing the cluster. Every member lands
/// in exactly one output entity. On refusal the whole cluster collapses into
/// one entity with concatenated descriptions (reported). Output ids are
/// provisional; the pipeline renumbers.
std::vector<CanonicalEntity> canonicalize_cluster(const EntityCluster& cluster,
                                                  std::span<const Segment> segments,
                                                  ChatBackend& builder, BuildReport* report);

/// Audiovisual cohesion pass: character entities sharing at least one speaker
/// label merge (transitively), because voice identity outlasts appearance
/// changes. Descriptions merge through one builder call with concatenation as
/// the fallback; non-character entities pass through untouched. `builder` may
/// be null, forcing the concatenation path.
std::vector<CanonicalEntity> speaker_priority_merge(std::vector<CanonicalEntity> entities,
                                                    ChatBackend* builder, BuildReport* report);

/// Entity-centric re-caption of one linked segment. Falls back to the
/// segment's composed text on refusal (reported).
std::string recaption_entity_segment(const CanonicalEntity& entity, const Segment& segment,
                                     ChatBackend& builder, BuildReport* report);

/// Full cohesion pipeline: extract -> embed -> cluster (per category) ->
/// canonicalize -> speaker-priority merge -> re-caption + embed. Entity ids
/// come out dense and ordered; recaption maps are complete over
/// linked_segments.
std::vector<CanonicalEntity> build_entity_database(std::span<const Segment> segments,
                                                   const BackendSet& backends,
                                                   const BuildConfig& config,
                                                   BuildReport& report);

} // namespace vix
