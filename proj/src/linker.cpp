#include "qinterp/linker.hpp"

#include <chrono>
#include <future>
#include <set>

#include "qinterp/errors.hpp"
#include "qinterp/text.hpp"

namespace qinterp {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

CandidateSet candidate_entities(const KnowledgeSnapshot& snapshot,
                                const Query& query, int depth) {
  CandidateSet out;
  const int n = query.size();
  for (int start = 0; start < n; ++start) {
    for (int end = start; end < n; ++end) {
      Segment seg{start, end, join_terms(query.terms, start, end)};
      std::vector<Candidate> list;
      std::set<EntityId> seen;
      for (EntityId& entity : snapshot.exact_lookup(seg.text)) {
        seen.insert(entity);
        list.push_back(Candidate{seg, std::move(entity), MatchKind::kExact, 1.0});
      }
      if (depth > 0) {
        for (FuzzyMatch& m : snapshot.fuzzy_lookup(seg.text, depth)) {
          if (!seen.insert(m.entity).second) continue;  // exact match wins
          list.push_back(
              Candidate{seg, std::move(m.entity), MatchKind::kFuzzy, m.score});
        }
      }
      out.spans.emplace(std::make_pair(start, end), std::move(list));
    }
  }
  return out;
}

LinkPhaseResult link_phase(const KnowledgeSnapshot& snapshot, const Query& query,
                           const EngineConfig& config) {
  if (query.size() > config.max_query_terms)
    throw QueryError("query has " + std::to_string(query.size()) +
                     " terms; limit is " + std::to_string(config.max_query_terms));

  LinkPhaseResult out;
  if (config.parallel_phases) {
    auto linking = std::async(std::launch::async, [&] {
      auto t0 = std::chrono::steady_clock::now();
      CandidateSet c = candidate_entities(snapshot, query, config.fuzzy_depth);
      return std::make_pair(std::move(c), ms_since(t0));
    });
    auto t0 = std::chrono::steady_clock::now();
    out.skeletons = filter_skeletons(
        rank_segmentations(snapshot, query, config.max_query_terms),
        config.threshold);
    out.segmentation_ms = ms_since(t0);
    auto [candidates, link_ms] = linking.get();
    out.candidates = std::move(candidates);
    out.linking_ms = link_ms;
    return out;
  }
  auto t0 = std::chrono::steady_clock::now();
  out.skeletons = filter_skeletons(
      rank_segmentations(snapshot, query, config.max_query_terms),
      config.threshold);
  out.segmentation_ms = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  out.candidates = candidate_entities(snapshot, query, config.fuzzy_depth);
  out.linking_ms = ms_since(t0);
  return out;
}

}  // namespace qinterp
