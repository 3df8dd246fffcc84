#include "qinterp/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "qinterp/errors.hpp"
#include "qinterp/text.hpp"

namespace qinterp {

Query tokenize(std::string_view raw) {
  std::string norm = normalize(raw);
  if (norm.empty()) throw QueryError("empty query");
  return Query{std::string(raw), split_terms(norm)};
}

std::string Segmentation::canonical() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += " | ";
    out += segments[i].text;
  }
  return out;
}

std::vector<Segmentation> enumerate_segmentations(const Query& query,
                                                  int max_terms) {
  const int n = query.size();
  if (n < 1) throw QueryError("empty query");
  if (n > max_terms)
    throw QueryError("query has " + std::to_string(n) + " terms; limit is " +
                     std::to_string(max_terms));

  std::vector<Segmentation> out;
  out.reserve(std::size_t{1} << (n - 1));
  // Bit i of the mask puts a boundary between terms i and i+1.
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << (n - 1)); ++mask) {
    Segmentation s;
    int start = 0;
    for (int i = 0; i < n; ++i) {
      bool boundary = (i == n - 1) || (mask >> i) & 1u;
      if (boundary) {
        s.segments.push_back(
            Segment{start, i, join_terms(query.terms, start, i)});
        start = i + 1;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<double> TitleBoostWeighting::weight(const Query& query,
                                                  const Segment& segment) const {
  const int len = segment.length();
  if (len == 1) return 0.0;
  if (snap_->has_title_or_redirect(segment.text)) {
    std::int64_t best = 0;
    for (int i = segment.start; i < segment.end; ++i) {
      auto f = snap_->ngram_frequency(query.terms[i] + " " + query.terms[i + 1]);
      if (f && *f > best) best = *f;
    }
    return static_cast<double>(1 + best) * len;
  }
  auto f = snap_->ngram_frequency(segment.text);
  if (!f) return std::nullopt;
  return static_cast<double>(*f) * len;
}

std::optional<double> segment_weight(const KnowledgeSnapshot& snapshot,
                                     const Query& query, const Segment& segment) {
  return TitleBoostWeighting(snapshot).weight(query, segment);
}

void score_segmentation(const SegmentWeighting& weighting, const Query& query,
                        Segmentation& s) {
  s.weights.clear();
  s.weights.reserve(s.segments.size());
  double sum = 0.0;
  bool missing = false;
  for (const Segment& seg : s.segments) {
    auto w = weighting.weight(query, seg);
    s.weights.push_back(w);
    if (w)
      sum += *w;
    else
      missing = true;
  }
  s.score = missing ? -1.0 : sum;
}

std::vector<Segmentation> rank_segmentations(const SegmentWeighting& weighting,
                                             const Query& query, int max_terms) {
  std::vector<Segmentation> all = enumerate_segmentations(query, max_terms);
  for (auto& s : all) score_segmentation(weighting, query, s);
  std::sort(all.begin(), all.end(), [](const Segmentation& a, const Segmentation& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.segments.size() != b.segments.size())
      return a.segments.size() < b.segments.size();
    return a.canonical() < b.canonical();
  });
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i].rank = static_cast<int>(i) + 1;
  return all;
}

std::vector<Segmentation> rank_segmentations(const KnowledgeSnapshot& snapshot,
                                             const Query& query, int max_terms) {
  return rank_segmentations(TitleBoostWeighting(snapshot), query, max_terms);
}

Segmentation no_segmentation(const Query& query) {
  Segmentation s;
  const int n = query.size();
  s.segments.reserve(n);
  s.weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    s.segments.push_back(Segment{i, i, query.terms[i]});
  s.score = 0.0;
  return s;
}

namespace {

// Index of the maximum-weight segment; absent weights rank below everything,
// ties go to the leftmost.
std::size_t max_weight_segment(const Segmentation& s) {
  std::size_t best = 0;
  double best_w = s.weights.empty() || !s.weights[0]
                      ? -std::numeric_limits<double>::infinity()
                      : *s.weights[0];
  for (std::size_t i = 1; i < s.segments.size(); ++i) {
    double w = s.weights[i] ? *s.weights[i]
                            : -std::numeric_limits<double>::infinity();
    if (w > best_w) {
      best_w = w;
      best = i;
    }
  }
  return best;
}

bool contains_segment(const Segmentation& s, const std::string& text) {
  for (const Segment& seg : s.segments)
    if (seg.text == text) return true;
  return false;
}

}  // namespace

SkeletonSet filter_skeletons(const std::vector<Segmentation>& ranked,
                             double threshold) {
  if (ranked.empty()) throw QueryError("no segmentations to filter");

  SkeletonSet out;
  out.threshold = threshold;
  out.decisions.reserve(ranked.size());

  if (ranked.front().score <= 0.0) {
    // Nothing has positive evidence: keep only the one-term-per-segment
    // fallback.
    const std::size_t n = ranked.front().segments.empty()
                              ? 0
                              : static_cast<std::size_t>(
                                    ranked.front()
                                        .segments.back()
                                        .end) +
                                    1;
    for (const Segmentation& s : ranked) {
      if (out.retained.empty() && s.segments.size() == n) {
        out.retained.push_back(s);
        out.decisions.push_back({s.rank, FilterAction::kRetained, std::nullopt});
      } else {
        out.decisions.push_back(
            {s.rank, FilterAction::kDroppedUnscorable, std::nullopt});
      }
    }
    return out;
  }

  bool open = true;  // the ratio filter has not yet closed the set
  for (const Segmentation& s : ranked) {
    if (out.retained.empty()) {
      out.retained.push_back(s);
      out.decisions.push_back({s.rank, FilterAction::kRetained, std::nullopt});
      continue;
    }
    const std::string& top_text = s.segments[max_weight_segment(s)].text;
    bool contained = false;
    for (const Segmentation& kept : out.retained) {
      if (contains_segment(kept, top_text)) {
        contained = true;
        break;
      }
    }
    if (contained) {
      out.decisions.push_back(
          {s.rank, FilterAction::kDroppedContained, std::nullopt});
      continue;
    }
    double ratio = s.score / out.retained.back().score;
    if (!open || ratio < threshold) {
      open = false;
      out.decisions.push_back({s.rank, FilterAction::kDroppedRatio, ratio});
      continue;
    }
    out.retained.push_back(s);
    out.decisions.push_back({s.rank, FilterAction::kRetained, ratio});
  }
  return out;
}

}  // namespace qinterp
