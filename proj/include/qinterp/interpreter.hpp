#ifndef QINTERP_INTERPRETER_HPP
#define QINTERP_INTERPRETER_HPP

#include <optional>
#include <string>
#include <vector>

#include "qinterp/config.hpp"
#include "qinterp/kbstore.hpp"
#include "qinterp/linker.hpp"
#include "qinterp/segmentation.hpp"

namespace qinterp {

// One segment of an interpretation: either linked to an entity or kept as a
// plain phrase.
struct LinkedSegment {
  Segment segment;
  std::optional<EntityId> link;

  bool operator==(const LinkedSegment&) const = default;
};

// Per-entity evidence behind an interpretation's score.
struct EntityScore {
  EntityId entity;
  double cmn = 0.0;  // commonness of the entity given its mention
  double rel = 0.0;  // mean cosine against the other linked entities
  double cxt = 0.0;  // mean cosine against the unlinked segments
};

struct Interpretation {
  std::vector<LinkedSegment> parts;  // a valid segmentation, in query order
  double score = 0.0;
  // One entry per distinct linked entity, in first-mention order; filled by
  // score_interpretation.
  std::vector<EntityScore> components;

  // "new york times->The_New_York_Times | square dance" — the dedup and
  // tie-break key.
  std::string canonical() const;
  // Distinct linked entities.
  int linked_count() const;
};

struct FilledSkeleton {
  std::vector<Interpretation> interpretations;
  bool truncated = false;  // the combinatorial cap cut the enumeration short
};

// Expands one skeleton into interpretations: per segment the options are the
// candidate entities with positive commonness (ordered by commonness
// descending, then entity id) plus "unlinked" last; the result is the
// Cartesian product across segments, enumerated best-options-first and
// truncated at `cap`.
FilledSkeleton fill_skeleton(const Segmentation& skeleton,
                             const CandidateSet& candidates,
                             const KnowledgeSnapshot& snapshot,
                             long long cap = 10000);

// Mean cosine similarity between `entity`'s embedding and the embeddings of
// the other distinct linked entities; pairs with a missing embedding
// contribute 0, and an interpretation with no other linked entity yields 0.
double relatedness(const KnowledgeSnapshot& snapshot, const EntityId& entity,
                   const Interpretation& interp);

// Mean cosine similarity between `entity`'s embedding and each unlinked
// segment's vector (the mean of the segment's available word vectors).
// 0 when every segment is linked or no vectors are available.
double context_score(const KnowledgeSnapshot& snapshot, const EntityId& entity,
                     const Interpretation& interp);

// score = (1/|E|) * sum over distinct linked entities e of
// (alpha*CMN(e) + beta*REL(e) + gamma*CXT(e)); 0 when nothing is linked.
// Fills interp.components and interp.score, and returns the score.
double score_interpretation(const KnowledgeSnapshot& snapshot,
                            Interpretation& interp, const ScoringWeights& weights);

struct PhaseTimings {
  double segmentation_ms = 0.0;
  double linking_ms = 0.0;
  double combination_ms = 0.0;
  double total_ms = 0.0;
};

struct InterpretResult {
  std::vector<Interpretation> interpretations;  // ranked best-first
  PhaseTimings timings;
  bool truncated = false;
};

// End-to-end pipeline: tokenize, rank+filter segmentations and link
// candidates (concurrently when configured), fill every retained skeleton,
// score, deduplicate, and sort by score descending (ties: more linked
// entities, then canonical text). config.top_k > 0 keeps only the best k.
InterpretResult interpret(const KnowledgeSnapshot& snapshot,
                          std::string_view raw_query, const EngineConfig& config);

}  // namespace qinterp

#endif  // QINTERP_INTERPRETER_HPP
