#ifndef QINTERP_LINKER_HPP
#define QINTERP_LINKER_HPP

#include <map>
#include <utility>
#include <vector>

#include "qinterp/config.hpp"
#include "qinterp/kbstore.hpp"
#include "qinterp/segmentation.hpp"

namespace qinterp {

enum class MatchKind : std::uint8_t { kExact, kFuzzy };

struct Candidate {
  Segment segment;
  EntityId entity;
  MatchKind match_kind = MatchKind::kExact;
  double lexical_score = 1.0;  // in (0,1]; always 1.0 for exact matches
};

// Candidate entities for every contiguous term span of one query.
struct CandidateSet {
  // Keyed by (start, end) term indices; spans with no candidates are present
  // with empty lists. Exact candidates precede fuzzy ones, and each entity
  // appears at most once per span (highest lexical score kept).
  std::map<std::pair<int, int>, std::vector<Candidate>> spans;

  const std::vector<Candidate>* find(int start, int end) const {
    auto it = spans.find({start, end});
    return it == spans.end() ? nullptr : &it->second;
  }
};

// Links all n(n+1)/2 segments: exact alias lookup plus up to `depth`
// trigram-similarity matches per segment. depth 0 disables fuzzy matching.
CandidateSet candidate_entities(const KnowledgeSnapshot& snapshot,
                                const Query& query, int depth);

struct LinkPhaseResult {
  SkeletonSet skeletons;
  CandidateSet candidates;
  double segmentation_ms = 0.0;  // wall time of rank + filter
  double linking_ms = 0.0;       // wall time of candidate lookup
};

// Runs segmentation (rank + filter) and candidate linking over the same
// query. The two halves are independent; with config.parallel_phases they
// run on separate threads, with identical results either way.
LinkPhaseResult link_phase(const KnowledgeSnapshot& snapshot, const Query& query,
                           const EngineConfig& config);

}  // namespace qinterp

#endif  // QINTERP_LINKER_HPP
