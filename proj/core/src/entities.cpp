#include "vix/entities.hpp"

#include "vix/errors.hpp"
#include "vix/parallel.hpp"
#include "vix/prompts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>

namespace vix {

namespace {

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string joined_descriptions(std::span<const EntityMention> members) {
    std::string out;
    for (const EntityMention& m : members) {
        if (out.find(m.description) != std::string::npos)
            continue;
        if (!out.empty())
            out += "; ";
        out += m.description;
    }
    return out;
}

std::vector<float> centroid_of(std::span<const EntityMention> mentions,
                               std::span<const std::size_t> member_ids,
                               const std::vector<std::size_t>& index_by_id) {
    const std::size_t dim = mentions[index_by_id[member_ids.front()]].embedding.size();
    std::vector<double> sum(dim, 0.0);
    for (std::size_t id : member_ids) {
        const auto& v = mentions[index_by_id[id]].embedding;
        for (std::size_t d = 0; d < dim; ++d)
            sum[d] += static_cast<double>(v[d]);
    }
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        sum[d] /= static_cast<double>(member_ids.size());
        norm_sq += sum[d] * sum[d];
    }
    std::vector<float> out(dim, 0.0f);
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t d = 0; d < dim; ++d)
            out[d] = static_cast<float>(sum[d] * inv);
    }
    return out;
}

EntityCategory majority_category(std::span<const EntityMention> members) {
    std::array<std::size_t, 4> counts{};
    for (const EntityMention& m : members)
        ++counts[static_cast<std::size_t>(m.category)];
    std::size_t best = static_cast<std::size_t>(members.front().category);
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] > counts[best])
            best = c;
    return static_cast<EntityCategory>(best);
}

struct RecaptionOutcome {
    std::string text;
    bool fallback = false;
};

RecaptionOutcome recaption_once(const CanonicalEntity& entity, const Segment& segment,
                                ChatBackend& builder) {
    try {
        std::string text = prompts::chat_parsed(
            builder, prompts::recaption_request(entity, segment),
            [](std::string_view reply) {
                if (is_blank(reply))
                    throw BackendRefusal("empty re-caption reply");
                return std::string(reply);
            });
        return {std::move(text), false};
    } catch (const BackendRefusal&) {
        return {segment.composed_text, true};
    }
}

std::vector<std::string> shared_labels(const CanonicalEntity& a, const CanonicalEntity& b) {
    std::vector<std::string> out;
    std::set_intersection(a.speaker_labels.begin(), a.speaker_labels.end(),
                          b.speaker_labels.begin(), b.speaker_labels.end(),
                          std::back_inserter(out));
    return out;
}

/// Folds b into a: union of links, recaptions, labels, and member mentions.
void absorb(CanonicalEntity& a, CanonicalEntity& b, std::string merged_description) {
    a.global_description = std::move(merged_description);
    a.linked_segments.insert(b.linked_segments.begin(), b.linked_segments.end());
    a.speaker_labels.insert(b.speaker_labels.begin(), b.speaker_labels.end());
    for (auto& [seg, text] : b.recaptions)
        a.recaptions.emplace(seg, std::move(text));
    for (auto& [seg, vec] : b.recaption_embeddings)
        a.recaption_embeddings.emplace(seg, std::move(vec));
    a.member_mentions.insert(a.member_mentions.end(), b.member_mentions.begin(),
                             b.member_mentions.end());
    std::sort(a.member_mentions.begin(), a.member_mentions.end());
}

} // namespace

std::vector<EntityMention> extract_entities(const Segment& segment, ChatBackend& builder) {
    if (segment.composed_text.empty())
        return {};
    auto raw = prompts::chat_parsed(builder, prompts::entity_extraction_request(segment),
                                    [](std::string_view text) {
                                        return prompts::parse_entities_reply(text);
                                    });
    std::vector<EntityMention> out;
    out.reserve(raw.size());
    for (prompts::RawMention& m : raw) {
        EntityMention mention;
        mention.segment_index = segment.index;
        mention.name = std::move(m.name);
        mention.category = m.category;
        mention.description = m.description.empty() ? mention.name : std::move(m.description);
        out.push_back(std::move(mention));
    }
    return out;
}

std::vector<EntityCluster> cluster_mentions(std::vector<EntityMention> mentions,
                                            double cosine_threshold) {
    if (mentions.empty())
        return {};
    std::sort(mentions.begin(), mentions.end(),
              [](const EntityMention& a, const EntityMention& b) {
                  return a.mention_id < b.mention_id;
              });
    const std::size_t dim = mentions.front().embedding.size();
    std::size_t max_id = 0;
    for (const EntityMention& m : mentions) {
        if (m.embedding.size() != dim || dim == 0)
            throw InputError("cluster_mentions requires every mention embedded at one dimension");
        max_id = std::max(max_id, m.mention_id);
    }
    std::vector<std::size_t> index_by_id(max_id + 1, 0);
    for (std::size_t i = 0; i < mentions.size(); ++i)
        index_by_id[mentions[i].mention_id] = i;

    // One cluster per mention; the vector stays ordered by the minimum member
    // id, so a lexicographic scan realizes the tie rule.
    struct Working {
        std::vector<std::size_t> member_ids; // ascending mention ids
        std::vector<float> centroid;
    };
    std::vector<Working> clusters;
    clusters.reserve(mentions.size());
    for (const EntityMention& m : mentions)
        clusters.push_back(Working{{m.mention_id}, m.embedding});

    // Pairwise centroid similarities, updated incrementally per merge.
    std::vector<std::vector<double>> sim(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        sim[i].resize(clusters.size(), 0.0);
        for (std::size_t j = 0; j < i; ++j) {
            sim[i][j] = cosine(clusters[i].centroid, clusters[j].centroid);
            sim[j][i] = sim[i][j];
        }
    }

    while (clusters.size() > 1) {
        std::size_t best_i = 0;
        std::size_t best_j = 0;
        double best = -2.0;
        for (std::size_t i = 0; i + 1 < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j)
                if (sim[i][j] > best) {
                    best = sim[i][j];
                    best_i = i;
                    best_j = j;
                }
        if (best < cosine_threshold)
            break;

        Working& keep = clusters[best_i];
        Working& gone = clusters[best_j];
        keep.member_ids.insert(keep.member_ids.end(), gone.member_ids.begin(),
                               gone.member_ids.end());
        std::sort(keep.member_ids.begin(), keep.member_ids.end());
        keep.centroid = centroid_of(mentions, keep.member_ids, index_by_id);

        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_j));
        sim.erase(sim.begin() + static_cast<std::ptrdiff_t>(best_j));
        for (auto& row : sim)
            row.erase(row.begin() + static_cast<std::ptrdiff_t>(best_j));
        for (std::size_t j = 0; j < clusters.size(); ++j) {
            if (j == best_i)
                continue;
            sim[best_i][j] = cosine(clusters[best_i].centroid, clusters[j].centroid);
            sim[j][best_i] = sim[best_i][j];
        }
    }

    std::vector<EntityCluster> out;
    out.reserve(clusters.size());
    for (Working& w : clusters) {
        EntityCluster c;
        for (std::size_t id : w.member_ids)
            c.members.push_back(mentions[index_by_id[id]]);
        c.centroid = std::move(w.centroid);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<CanonicalEntity> canonicalize_cluster(const EntityCluster& cluster,
                                                  std::span<const Segment> segments,
                                                  ChatBackend& builder, BuildReport* report) {
    if (cluster.members.empty())
        throw InputError("canonicalize_cluster over an empty cluster");
    std::vector<prompts::CanonGroup> groups;
    bool fallback = false;
    try {
        groups = prompts::chat_parsed(builder, prompts::canonicalize_request(cluster.members),
                                      [n = cluster.members.size()](std::string_view text) {
                                          return prompts::parse_canonicalize_reply(text, n);
                                      });
    } catch (const BackendRefusal&) {
        fallback = true;
        prompts::CanonGroup whole;
        whole.name = cluster.members.front().name;
        whole.description = joined_descriptions(cluster.members);
        for (std::size_t i = 0; i < cluster.members.size(); ++i)
            whole.members.push_back(i);
        groups = {std::move(whole)};
    }

    std::vector<CanonicalEntity> out;
    for (prompts::CanonGroup& g : groups) {
        std::sort(g.members.begin(), g.members.end());
        std::vector<EntityMention> group_members;
        for (std::size_t idx : g.members)
            group_members.push_back(cluster.members[idx]);

        CanonicalEntity e;
        e.name = g.name.empty() ? group_members.front().name : std::move(g.name);
        e.category = majority_category(group_members);
        e.global_description =
            g.description.empty() ? joined_descriptions(group_members) : std::move(g.description);
        for (const EntityMention& m : group_members) {
            e.linked_segments.insert(m.segment_index);
            e.member_mentions.push_back(m.mention_id);
            if (m.segment_index < segments.size())
                for (const std::string& label : segments[m.segment_index].speakers)
                    e.speaker_labels.insert(label);
        }
        std::sort(e.member_mentions.begin(), e.member_mentions.end());
        out.push_back(std::move(e));
    }
    if (report != nullptr)
        report->add({{"phase", "canonicalize"},
                     {"members", cluster.members.size()},
                     {"entities", out.size()},
                     {"fallback", fallback}});
    return out;
}

std::vector<CanonicalEntity> speaker_priority_merge(std::vector<CanonicalEntity> entities,
                                                    ChatBackend* builder, BuildReport* report) {
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < entities.size() && !merged; ++i) {
            if (entities[i].category != EntityCategory::character)
                continue;
            for (std::size_t j = i + 1; j < entities.size() && !merged; ++j) {
                if (entities[j].category != EntityCategory::character)
                    continue;
                std::vector<std::string> shared = shared_labels(entities[i], entities[j]);
                if (shared.empty())
                    continue;

                std::string description;
                bool fallback = false;
                if (builder != nullptr) {
                    try {
                        description = prompts::chat_parsed(
                            *builder,
                            prompts::merge_descriptions_request(entities[i], entities[j], shared),
                            [](std::string_view reply) {
                                if (is_blank(reply))
                                    throw BackendRefusal("empty merge reply");
                                return std::string(reply);
                            });
                    } catch (const BackendRefusal&) {
                        fallback = true;
                    }
                } else {
                    fallback = true;
                }
                if (fallback)
                    description = fmt::format("{}; {}", entities[i].global_description,
                                              entities[j].global_description);

                if (report != nullptr)
                    report->add({{"phase", "speaker_merge"},
                                 {"into", entities[i].name},
                                 {"from", entities[j].name},
                                 {"shared_labels", shared},
                                 {"fallback", fallback}});
                absorb(entities[i], entities[j], std::move(description));
                entities.erase(entities.begin() + static_cast<std::ptrdiff_t>(j));
                merged = true;
            }
        }
    }
    return entities;
}

std::string recaption_entity_segment(const CanonicalEntity& entity, const Segment& segment,
                                     ChatBackend& builder, BuildReport* report) {
    if (!entity.linked_segments.contains(segment.index))
        throw InputError(fmt::format("segment {} is not linked to entity {}", segment.index,
                                     entity.id));
    RecaptionOutcome outcome = recaption_once(entity, segment, builder);
    if (outcome.fallback && report != nullptr)
        report->add({{"phase", "recaption_fallback"},
                     {"entity", entity.id},
                     {"segment", segment.index}});
    return std::move(outcome.text);
}

std::vector<CanonicalEntity> build_entity_database(std::span<const Segment> segments,
                                                   const BackendSet& backends,
                                                   const BuildConfig& config,
                                                   BuildReport& report) {
    // Extraction fans out per segment; refusals degrade to empty lists.
    std::vector<std::vector<EntityMention>> per_segment(segments.size());
    std::vector<char> refused(segments.size(), 0);
    parallel_for(segments.size(), config.workers, [&](std::size_t i) {
        try {
            per_segment[i] = extract_entities(segments[i], *backends.builder);
        } catch (const BackendRefusal&) {
            refused[i] = 1;
        }
    });

    std::vector<EntityMention> mentions;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        for (EntityMention& m : per_segment[i]) {
            m.mention_id = mentions.size();
            mentions.push_back(std::move(m));
        }
        report.add({{"phase", "extract"},
                    {"segment", i},
                    {"mentions", per_segment[i].size()},
                    {"refused", refused[i] != 0}});
    }

    parallel_for(mentions.size(), config.workers, [&](std::size_t i) {
        mentions[i].embedding = backends.text_embedder->embed_text(mentions[i].description);
    });

    // Per-category clustering keeps characters and locations apart.
    std::vector<EntityCluster> clusters;
    for (EntityCategory cat : {EntityCategory::character, EntityCategory::location,
                               EntityCategory::event, EntityCategory::other}) {
        std::vector<EntityMention> of_cat;
        for (const EntityMention& m : mentions)
            if (m.category == cat)
                of_cat.push_back(m);
        if (of_cat.empty())
            continue;
        std::size_t count = of_cat.size();
        auto cat_clusters = cluster_mentions(std::move(of_cat), config.cluster_threshold);
        report.add({{"phase", "cluster"},
                    {"category", std::string(to_string(cat))},
                    {"mentions", count},
                    {"clusters", cat_clusters.size()}});
        for (EntityCluster& c : cat_clusters) {
            for (const EntityMention& m : c.members)
                if (m.segment_index < segments.size())
                    for (const std::string& label : segments[m.segment_index].speakers)
                        c.speaker_labels.insert(label);
            clusters.push_back(std::move(c));
        }
    }

    std::vector<CanonicalEntity> entities;
    for (const EntityCluster& cluster : clusters) {
        auto canon = canonicalize_cluster(cluster, segments, *backends.builder, &report);
        for (CanonicalEntity& e : canon) {
            e.id = entities.size();
            entities.push_back(std::move(e));
        }
    }

    entities = speaker_priority_merge(std::move(entities), backends.builder.get(), &report);
    for (std::size_t j = 0; j < entities.size(); ++j)
        entities[j].id = j;

    // Re-captioning fans out per (entity, segment) pair; assembly and report
    // lines stay in pair order.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const CanonicalEntity& e : entities)
        for (std::size_t seg : e.linked_segments)
            pairs.emplace_back(e.id, seg);
    std::vector<RecaptionOutcome> outcomes(pairs.size());
    parallel_for(pairs.size(), config.workers, [&](std::size_t p) {
        const auto& [j, seg] = pairs[p];
        outcomes[p] = recaption_once(entities[j], segments[seg], *backends.builder);
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& [j, seg] = pairs[p];
        if (outcomes[p].fallback)
            report.add({{"phase", "recaption_fallback"}, {"entity", j}, {"segment", seg}});
        entities[j].recaptions[seg] = std::move(outcomes[p].text);
    }
    std::vector<std::vector<float>> recaption_vecs(pairs.size());
    parallel_for(pairs.size(), config.workers, [&](std::size_t p) {
        const auto& [j, seg] = pairs[p];
        recaption_vecs[p] = backends.text_embedder->embed_text(entities[j].recaptions.at(seg));
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& [j, seg] = pairs[p];
        entities[j].recaption_embeddings[seg] = std::move(recaption_vecs[p]);
    }

    report.add({{"phase", "entity_summary"},
                {"mentions", mentions.size()},
                {"entities", entities.size()},
                {"recaptions", pairs.size()}});
    return entities;
}

} // namespace vix
