#include "qinterp/interpreter.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "qinterp/errors.hpp"

namespace qinterp {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

// Distinct linked entities in first-mention order.
std::vector<EntityId> distinct_entities(const Interpretation& interp) {
  std::vector<EntityId> out;
  for (const LinkedSegment& p : interp.parts) {
    if (!p.link) continue;
    if (std::find(out.begin(), out.end(), *p.link) == out.end())
      out.push_back(*p.link);
  }
  return out;
}

// Mention text of the entity's first link in the interpretation.
const std::string* first_mention(const Interpretation& interp,
                                 const EntityId& entity) {
  for (const LinkedSegment& p : interp.parts)
    if (p.link && *p.link == entity) return &p.segment.text;
  return nullptr;
}

// Component-wise mean of the segment's available word vectors; empty when
// none of the words has a vector.
std::vector<float> segment_vector(const KnowledgeSnapshot& snapshot,
                                  const Segment& seg,
                                  const std::vector<std::string>& terms) {
  std::vector<float> sum;
  int found = 0;
  for (int i = seg.start; i <= seg.end; ++i) {
    const std::vector<float>* v = snapshot.embedding_of(terms[i]);
    if (!v) continue;
    if (sum.empty()) sum.assign(v->size(), 0.0f);
    for (std::size_t j = 0; j < v->size(); ++j) sum[j] += (*v)[j];
    ++found;
  }
  if (found == 0) return {};
  for (float& x : sum) x /= static_cast<float>(found);
  return sum;
}

}  // namespace

std::string Interpretation::canonical() const {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += " | ";
    out += parts[i].segment.text;
    if (parts[i].link) {
      out += "->";
      out += *parts[i].link;
    }
  }
  return out;
}

int Interpretation::linked_count() const {
  return static_cast<int>(distinct_entities(*this).size());
}

FilledSkeleton fill_skeleton(const Segmentation& skeleton,
                             const CandidateSet& candidates,
                             const KnowledgeSnapshot& snapshot, long long cap) {
  struct Option {
    std::optional<EntityId> link;
    double cmn = 0.0;
  };
  // Per segment: positive-commonness candidates ordered by commonness
  // descending (ties: entity id), with "unlinked" as the final option.
  std::vector<std::vector<Option>> options(skeleton.segments.size());
  for (std::size_t i = 0; i < skeleton.segments.size(); ++i) {
    const Segment& seg = skeleton.segments[i];
    const std::vector<Candidate>* cands = candidates.find(seg.start, seg.end);
    std::vector<Option>& opts = options[i];
    if (cands) {
      for (const Candidate& c : *cands) {
        auto cmn = snapshot.commonness(seg.text, c.entity);
        if (cmn && *cmn > 0.0) opts.push_back(Option{c.entity, *cmn});
      }
      std::sort(opts.begin(), opts.end(), [](const Option& a, const Option& b) {
        if (a.cmn != b.cmn) return a.cmn > b.cmn;
        return *a.link < *b.link;
      });
    }
    opts.push_back(Option{std::nullopt, 0.0});
  }

  long long total = 1;
  for (const auto& opts : options) {
    total *= static_cast<long long>(opts.size());
    if (total > cap) break;  // avoid overflow; exact count not needed beyond cap
  }

  FilledSkeleton out;
  out.truncated = total > cap;
  long long limit = out.truncated ? cap : total;
  out.interpretations.reserve(static_cast<std::size_t>(limit));

  // Odometer over option indices, last segment fastest, so enumeration order
  // is best-first under the per-segment commonness ordering.
  std::vector<std::size_t> digits(options.size(), 0);
  for (long long produced = 0; produced < limit; ++produced) {
    Interpretation interp;
    interp.parts.reserve(options.size());
    for (std::size_t i = 0; i < options.size(); ++i)
      interp.parts.push_back(
          LinkedSegment{skeleton.segments[i], options[i][digits[i]].link});
    out.interpretations.push_back(std::move(interp));
    for (std::size_t i = options.size(); i-- > 0;) {
      if (++digits[i] < options[i].size()) break;
      digits[i] = 0;
    }
  }
  return out;
}

double relatedness(const KnowledgeSnapshot& snapshot, const EntityId& entity,
                   const Interpretation& interp) {
  std::vector<EntityId> entities = distinct_entities(interp);
  std::size_t others = 0;
  double sum = 0.0;
  const std::vector<float>* self = snapshot.embedding_of(entity_embedding_key(entity));
  for (const EntityId& other : entities) {
    if (other == entity) continue;
    ++others;
    if (!self) continue;
    const std::vector<float>* ov = snapshot.embedding_of(entity_embedding_key(other));
    if (!ov) continue;
    sum += cosine(*self, *ov);
  }
  if (others == 0) return 0.0;
  return sum / static_cast<double>(others);
}

double context_score(const KnowledgeSnapshot& snapshot, const EntityId& entity,
                     const Interpretation& interp) {
  const std::vector<float>* self = snapshot.embedding_of(entity_embedding_key(entity));
  std::size_t unlinked = 0;
  double sum = 0.0;
  for (const LinkedSegment& p : interp.parts) {
    if (p.link) continue;
    ++unlinked;
    if (!self) continue;
    std::vector<std::string> words;  // term list for the segment vector
    words.reserve(p.segment.length());
    // The segment text is already normalized; split on spaces.
    std::size_t pos = 0;
    const std::string& text = p.segment.text;
    while (pos < text.size()) {
      std::size_t space = text.find(' ', pos);
      if (space == std::string::npos) space = text.size();
      words.push_back(text.substr(pos, space - pos));
      pos = space + 1;
    }
    Segment local{0, static_cast<int>(words.size()) - 1, text};
    std::vector<float> seg_vec = segment_vector(snapshot, local, words);
    if (!seg_vec.empty()) sum += cosine(*self, seg_vec);
  }
  if (unlinked == 0) return 0.0;
  return sum / static_cast<double>(unlinked);
}

double score_interpretation(const KnowledgeSnapshot& snapshot,
                            Interpretation& interp,
                            const ScoringWeights& weights) {
  interp.components.clear();
  std::vector<EntityId> entities = distinct_entities(interp);
  if (entities.empty()) {
    interp.score = 0.0;
    return 0.0;
  }
  double sum = 0.0;
  for (const EntityId& e : entities) {
    EntityScore es;
    es.entity = e;
    const std::string* mention = first_mention(interp, e);
    es.cmn = mention ? snapshot.commonness(*mention, e).value_or(0.0) : 0.0;
    es.rel = relatedness(snapshot, e, interp);
    es.cxt = context_score(snapshot, e, interp);
    sum += weights.alpha * es.cmn + weights.beta * es.rel + weights.gamma * es.cxt;
    interp.components.push_back(std::move(es));
  }
  interp.score = sum / static_cast<double>(entities.size());
  return interp.score;
}

InterpretResult interpret(const KnowledgeSnapshot& snapshot,
                          std::string_view raw_query,
                          const EngineConfig& config) {
  auto t_total = std::chrono::steady_clock::now();
  Query query = tokenize(raw_query);
  LinkPhaseResult linked = link_phase(snapshot, query, config);

  auto t_comb = std::chrono::steady_clock::now();
  InterpretResult out;
  std::set<std::string> seen;
  for (const Segmentation& skeleton : linked.skeletons.retained) {
    FilledSkeleton filled = fill_skeleton(skeleton, linked.candidates, snapshot,
                                          config.combinatorial_cap);
    out.truncated = out.truncated || filled.truncated;
    for (Interpretation& interp : filled.interpretations) {
      if (!seen.insert(interp.canonical()).second) continue;
      score_interpretation(snapshot, interp, config.weights);
      out.interpretations.push_back(std::move(interp));
    }
  }

  std::sort(out.interpretations.begin(), out.interpretations.end(),
            [](const Interpretation& a, const Interpretation& b) {
              if (a.score != b.score) return a.score > b.score;
              int la = a.linked_count(), lb = b.linked_count();
              if (la != lb) return la > lb;
              return a.canonical() < b.canonical();
            });
  if (config.top_k > 0 &&
      out.interpretations.size() > static_cast<std::size_t>(config.top_k))
    out.interpretations.resize(static_cast<std::size_t>(config.top_k));

  out.timings.segmentation_ms = linked.segmentation_ms;
  out.timings.linking_ms = linked.linking_ms;
  out.timings.combination_ms = ms_since(t_comb);
  out.timings.total_ms = ms_since(t_total);
  return out;
}

}  // namespace qinterp
