#ifndef QINTERP_SEGMENTATION_HPP
#define QINTERP_SEGMENTATION_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qinterp/kbstore.hpp"

namespace qinterp {

struct Query {
  std::string raw;
  std::vector<std::string> terms;  // normalized, whitespace-free, non-empty

  int size() const { return static_cast<int>(terms.size()); }
};

// Normalizes and splits a raw query. Throws QueryError when nothing remains
// after normalization.
Query tokenize(std::string_view raw);

// A run of consecutive query terms, inclusive on both ends.
struct Segment {
  int start = 0;
  int end = 0;
  std::string text;  // terms[start..end] joined by single spaces

  int length() const { return end - start + 1; }
  bool operator==(const Segment&) const = default;
};

struct Segmentation {
  std::vector<Segment> segments;  // disjoint, covering, in query order
  // Per-segment weights, parallel to `segments`; nullopt marks a multi-term
  // segment with no frequency evidence (these force the score to -1).
  std::vector<std::optional<double>> weights;
  double score = 0.0;
  int rank = 0;  // 1-based position after ranking; 0 before

  // "new york times | square dance" — segment texts joined by " | ".
  std::string canonical() const;
};

// All 2^(n-1) ways to split the query at term boundaries, in boundary-mask
// order. Throws QueryError when the query has more than `max_terms` terms.
std::vector<Segmentation> enumerate_segmentations(const Query& query,
                                                  int max_terms = 16);

// How much evidence a single segment contributes to a segmentation's score.
class SegmentWeighting {
 public:
  virtual ~SegmentWeighting() = default;
  // nullopt = no usable frequency evidence for a multi-term segment.
  virtual std::optional<double> weight(const Query& query,
                                       const Segment& segment) const = 0;
};

// Default scheme: single-term segments weigh 0; a multi-term segment whose
// surface is a title or redirect weighs (1 + max frequency of any word
// bigram inside it) x length; any other multi-term segment weighs its own
// n-gram frequency x length, or has no evidence when the table lacks it.
class TitleBoostWeighting final : public SegmentWeighting {
 public:
  explicit TitleBoostWeighting(const KnowledgeSnapshot& snapshot)
      : snap_(&snapshot) {}
  std::optional<double> weight(const Query& query,
                               const Segment& segment) const override;

 private:
  const KnowledgeSnapshot* snap_;
};

std::optional<double> segment_weight(const KnowledgeSnapshot& snapshot,
                                     const Query& query, const Segment& segment);

// Fills `weights` and `score`: the sum of segment weights, or -1 when any
// multi-term segment lacks evidence. All-single-term segmentations score 0.
void score_segmentation(const SegmentWeighting& weighting, const Query& query,
                        Segmentation& s);

// Enumerates, scores, and sorts all segmentations: score descending, then
// fewer segments, then canonical text. Ranks are assigned 1..2^(n-1).
std::vector<Segmentation> rank_segmentations(const SegmentWeighting& weighting,
                                             const Query& query,
                                             int max_terms = 16);
std::vector<Segmentation> rank_segmentations(const KnowledgeSnapshot& snapshot,
                                             const Query& query,
                                             int max_terms = 16);

// One segment per term; the degenerate segmentation every query falls back
// to when no split has positive evidence. Always scores 0.
Segmentation no_segmentation(const Query& query);

enum class FilterAction {
  kRetained,
  kDroppedContained,   // max-weight segment already present in a retained one
  kDroppedRatio,       // score ratio against the last retained fell below the
                       // threshold (this closes the set for everything below)
  kDroppedUnscorable,  // nothing scored above 0; the fallback took over
};

struct FilterDecision {
  int rank = 0;
  FilterAction action = FilterAction::kRetained;
  std::optional<double> ratio;  // score(S) / score(last retained), when tested
};

struct SkeletonSet {
  std::vector<Segmentation> retained;  // subsequence of the ranked input
  double threshold = 0.0;
  std::vector<FilterDecision> decisions;  // one per ranked segmentation
};

// Prunes a ranked list down to the segmentations worth interpreting.
// Rank 1 is always retained while its score is positive; a later S is dropped
// when its maximum-weight segment (ties: leftmost) already appears in a
// retained segmentation, and retention stops entirely at the first S whose
// score ratio to the last retained one falls below `threshold`. When nothing
// scores above 0, only the one-term-per-segment fallback is retained.
SkeletonSet filter_skeletons(const std::vector<Segmentation>& ranked,
                             double threshold);

}  // namespace qinterp

#endif  // QINTERP_SEGMENTATION_HPP
