#ifndef QINTERP_TESTS_SUPPORT_ORACLE_HPP
#define QINTERP_TESTS_SUPPORT_ORACLE_HPP

// Reference implementations used to cross-check the engine. Everything here
// is written from the definitions, in deliberately different code shapes
// than the production modules, and trades speed for obviousness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qinterp/corpus.hpp"
#include "qinterp/evaluation.hpp"
#include "qinterp/kbstore.hpp"
#include "qinterp/segmentation.hpp"

namespace qinterp::testsupport {

// --- segmentation ------------------------------------------------------------

// All compositions of n (segment length lists), built recursively; an
// independent enumeration to compare against the boundary-mask one.
inline void compositions_rec(int remaining, std::vector<int>& prefix,
                             std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.push_back(prefix);
    return;
  }
  for (int take = 1; take <= remaining; ++take) {
    prefix.push_back(take);
    compositions_rec(remaining - take, prefix, out);
    prefix.pop_back();
  }
}

inline std::vector<std::vector<int>> all_compositions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  compositions_rec(n, prefix, out);
  return out;
}

// Score of one composition under a weighting, straight from the rules: sum
// the weights, bail to -1 on any missing one.
inline double composition_score(const SegmentWeighting& weighting,
                                const Query& query,
                                const std::vector<int>& lengths) {
  double sum = 0.0;
  int start = 0;
  for (int len : lengths) {
    int end = start + len - 1;
    std::string text = query.terms[start];
    for (int i = start + 1; i <= end; ++i) text += " " + query.terms[i];
    auto w = weighting.weight(query, Segment{start, end, text});
    if (!w.has_value()) return -1.0;
    sum += *w;
    start = end + 1;
  }
  return sum;
}

// --- cosine / interpretation scoring ----------------------------------------

inline double oracle_cosine(const std::vector<float>& a,
                            const std::vector<float>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Raw knowledge tables a test generates; the oracle consumes these directly
// so its arithmetic never goes through the snapshot API.
struct RawKb {
  // (surface, entity, source)
  std::vector<std::tuple<std::string, std::string, AliasSource>> aliases;
  std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> anchors;
  std::map<std::string, std::int64_t> ngrams;
  std::map<std::string, std::vector<float>> embeddings;

  KnowledgeSnapshot build() const {
    SnapshotBuilder b;
    for (const auto& [surface, entity, source] : aliases)
      b.add_alias(surface, entity, source);
    for (const auto& [anchor, counts] : anchors)
      for (const auto& [entity, count] : counts) b.add_anchor(anchor, entity, count);
    for (const auto& [ngram, freq] : ngrams) b.add_ngram(ngram, freq);
    for (const auto& [key, vec] : embeddings) b.add_embedding(key, vec);
    return b.build();
  }

  double commonness(const std::string& mention, const std::string& entity) const {
    auto it = anchors.find(mention);
    if (it == anchors.end()) return 0.0;
    std::int64_t total = 0, hit = 0;
    for (const auto& [e, c] : it->second) {
      total += c;
      if (e == entity) hit += c;
    }
    if (total <= 0) return 0.0;
    return double(hit) / double(total);
  }

  const std::vector<float>* embedding(const std::string& key) const {
    auto it = embeddings.find(key);
    return it == embeddings.end() ? nullptr : &it->second;
  }

  // Exact alias candidates for a surface (any source), de-duplicated.
  std::vector<std::string> exact_candidates(const std::string& surface) const {
    std::set<std::string> out;
    for (const auto& [s, entity, source] : aliases) {
      (void)source;
      if (s == surface) out.insert(entity);
    }
    return {out.begin(), out.end()};
  }
};

// One candidate assignment over a skeleton, oracle-side.
struct OraclePart {
  std::string text;
  std::vector<std::string> words;
  std::optional<std::string> entity;
};

// Interpretation score recomputed from the formula: the mean over distinct
// linked entities of alpha*CMN + beta*REL + gamma*CXT.
inline double oracle_interpretation_score(const RawKb& kb,
                                          const std::vector<OraclePart>& parts,
                                          double alpha, double beta, double gamma) {
  // Distinct entities with their first mention.
  std::vector<std::pair<std::string, std::string>> ents;  // (entity, mention)
  for (const auto& p : parts) {
    if (!p.entity) continue;
    bool seen = false;
    for (const auto& [e, m] : ents) {
      (void)m;
      if (e == *p.entity) seen = true;
    }
    if (!seen) ents.push_back({*p.entity, p.text});
  }
  if (ents.empty()) return 0.0;

  std::vector<std::optional<std::vector<float>>> unlinked_vecs;
  for (const auto& p : parts) {
    if (p.entity) continue;
    std::vector<float> mean;
    int present = 0;
    for (const auto& w : p.words) {
      if (const auto* v = kb.embedding(w)) {
        if (mean.empty()) mean.assign(v->size(), 0.0f);
        for (std::size_t i = 0; i < v->size(); ++i) mean[i] += (*v)[i];
        ++present;
      }
    }
    if (present > 0) {
      for (auto& x : mean) x /= float(present);
      unlinked_vecs.emplace_back(std::move(mean));
    } else {
      unlinked_vecs.emplace_back(std::nullopt);
    }
  }
  const int unlinked = static_cast<int>(unlinked_vecs.size());

  double total = 0.0;
  for (const auto& [entity, mention] : ents) {
    double cmn = kb.commonness(mention, entity);
    const auto* self = kb.embedding("ENTITY/" + entity);
    double rel = 0.0;
    if (ents.size() > 1) {
      double sum = 0.0;
      for (const auto& [other, om] : ents) {
        (void)om;
        if (other == entity) continue;
        const auto* ov = kb.embedding("ENTITY/" + other);
        if (self && ov) sum += oracle_cosine(*self, *ov);
      }
      rel = sum / double(ents.size() - 1);
    }
    double cxt = 0.0;
    if (unlinked > 0) {
      double sum = 0.0;
      for (const auto& uv : unlinked_vecs)
        if (self && uv) sum += oracle_cosine(*self, *uv);
      cxt = sum / double(unlinked);
    }
    total += alpha * cmn + beta * rel + gamma * cxt;
  }
  return total / double(ents.size());
}

// Brute-force pool over one skeleton: every assignment of each segment to a
// positive-commonness exact candidate or to "unlinked", keyed by the same
// canonical form the engine uses.
inline void oracle_fill_rec(const RawKb& kb, const std::vector<OraclePart>& segs,
                            std::size_t idx, std::vector<OraclePart>& current,
                            double alpha, double beta, double gamma,
                            std::map<std::string, double>& pool) {
  if (idx == segs.size()) {
    std::string key;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (i) key += " | ";
      key += current[i].text;
      if (current[i].entity) key += "->" + *current[i].entity;
    }
    pool[key] = oracle_interpretation_score(kb, current, alpha, beta, gamma);
    return;
  }
  const auto& seg = segs[idx];
  std::vector<std::optional<std::string>> options;
  for (const auto& entity : kb.exact_candidates(seg.text))
    if (kb.commonness(seg.text, entity) > 0.0) options.push_back(entity);
  options.push_back(std::nullopt);
  for (const auto& opt : options) {
    current.push_back(OraclePart{seg.text, seg.words, opt});
    oracle_fill_rec(kb, segs, idx + 1, current, alpha, beta, gamma, pool);
    current.pop_back();
  }
}

// --- metrics -----------------------------------------------------------------

// Entity precision / recall / weighted recall, piecewise by emptiness.
inline void oracle_entity_metrics(const std::set<std::string>& pred,
                                  const std::map<std::string, int>& gold,
                                  double& prec, double& rec, double& rec_star) {
  int inter = 0, inter_rel = 0, gold_rel = 0;
  for (const auto& [e, r] : gold) {
    gold_rel += r;
    if (pred.count(e)) {
      ++inter;
      inter_rel += r;
    }
  }
  if (pred.empty())
    prec = gold.empty() ? 1.0 : 0.0;
  else
    prec = double(inter) / double(pred.size());
  if (gold.empty()) {
    rec = pred.empty() ? 1.0 : 0.0;
    rec_star = rec;
  } else {
    rec = double(inter) / double(gold.size());
    rec_star = double(inter_rel) / double(gold_rel);
  }
}

// Interpretation-level macro metrics recomputed from the definitions.
struct OracleInterpMetrics {
  double pr = 0, pr_star = 0, pp = 0, pf1 = 0;  // partial side
  double cr = 0, cr_star = 0, cp = 0, cf1 = 0;  // complete side
};

inline bool oracle_parts_equal(const std::vector<Part>& a,
                               const std::vector<Part>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].text != b[i].text || a[i].entity != b[i].entity) return false;
  return true;
}

inline bool oracle_links_equal(const std::vector<Part>& a,
                               const std::vector<Part>& b) {
  std::vector<std::string> la, lb;
  for (const auto& p : a)
    if (p.entity) la.push_back(*p.entity);
  for (const auto& p : b)
    if (p.entity) lb.push_back(*p.entity);
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  return la == lb;
}

inline OracleInterpMetrics oracle_interpretation_metrics(
    const std::vector<RunRecord>& run,
    const std::vector<GroundTruthRecord>& corpus, int min_grade, int top_k) {
  std::map<std::string, const GroundTruthRecord*> by_id;
  for (const auto& r : corpus) by_id[r.id] = &r;

  OracleInterpMetrics m;
  int n = 0;
  double lat_sum = 0;
  int lat_n = 0;
  for (const auto& rec : run) {
    const GroundTruthRecord* gt = by_id.at(rec.query_id);
    // Gold classes: kept members grouped by equivalence class, class grade =
    // max member grade.
    std::map<int, std::vector<const GroundTruthInterpretation*>> classes;
    std::map<int, int> class_grade;
    for (const auto& gi : gt->interpretations) {
      if (gi.grade < min_grade) continue;
      classes[gi.equivalence_class].push_back(&gi);
      auto it = class_grade.find(gi.equivalence_class);
      if (it == class_grade.end() || gi.grade > it->second)
        class_grade[gi.equivalence_class] = gi.grade;
    }
    // Predictions: best-score-first (stable), then the top k.
    std::vector<const RunInterpretation*> preds;
    for (const auto& ri : rec.interpretations) preds.push_back(&ri);
    std::stable_sort(preds.begin(), preds.end(),
                     [](auto* a, auto* b) { return a->score > b->score; });
    if (top_k > 0 && int(preds.size()) > top_k) preds.resize(top_k);

    double grade_total = 0;
    for (const auto& [cls, g] : class_grade) {
      (void)cls;
      grade_total += g;
    }

    double p_hit_cls = 0, p_hit_grade = 0, c_hit_cls = 0, c_hit_grade = 0;
    for (const auto& [cls, members] : classes) {
      bool partial = false, complete = false;
      for (const auto* gi : members) {
        for (const auto* pred : preds) {
          if (oracle_parts_equal(pred->parts, gi->parts)) complete = true;
          if (oracle_links_equal(pred->parts, gi->parts)) partial = true;
        }
      }
      if (partial) {
        p_hit_cls += 1;
        p_hit_grade += class_grade.at(cls);
      }
      if (complete) {
        c_hit_cls += 1;
        c_hit_grade += class_grade.at(cls);
      }
    }
    int p_pred_hits = 0, c_pred_hits = 0;
    for (const auto* pred : preds) {
      bool partial = false, complete = false;
      for (const auto& [cls, members] : classes) {
        (void)cls;
        for (const auto* gi : members) {
          if (oracle_parts_equal(pred->parts, gi->parts)) complete = true;
          if (oracle_links_equal(pred->parts, gi->parts)) partial = true;
        }
      }
      if (partial) ++p_pred_hits;
      if (complete) ++c_pred_hits;
    }

    auto side = [&](double hit_cls, double hit_grade, int pred_hits, double& r,
                    double& rs, double& p, double& f1) {
      if (classes.empty()) {
        r = preds.empty() ? 1.0 : 0.0;
        rs = r;
      } else {
        r = hit_cls / double(classes.size());
        rs = hit_grade / grade_total;
      }
      if (preds.empty())
        p = classes.empty() ? 1.0 : 0.0;
      else
        p = double(pred_hits) / double(preds.size());
      f1 = (p + r == 0) ? 0.0 : 2 * p * r / (p + r);
    };
    double r, rs, p, f1;
    side(p_hit_cls, p_hit_grade, p_pred_hits, r, rs, p, f1);
    m.pr += r;
    m.pr_star += rs;
    m.pp += p;
    m.pf1 += f1;
    side(c_hit_cls, c_hit_grade, c_pred_hits, r, rs, p, f1);
    m.cr += r;
    m.cr_star += rs;
    m.cp += p;
    m.cf1 += f1;
    ++n;
    if (rec.latency_ms) {
      lat_sum += *rec.latency_ms;
      ++lat_n;
    }
  }
  if (n > 0) {
    m.pr /= n;
    m.pr_star /= n;
    m.pp /= n;
    m.pf1 /= n;
    m.cr /= n;
    m.cr_star /= n;
    m.cp /= n;
    m.cf1 /= n;
  }
  return m;
}

}  // namespace qinterp::testsupport

#endif
