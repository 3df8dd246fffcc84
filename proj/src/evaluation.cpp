#include "qinterp/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "qinterp/errors.hpp"
#include "qinterp/linker.hpp"

namespace qinterp {

EntityTriple entity_metrics(const std::set<EntityId>& predicted,
                            const std::map<EntityId, int>& gold) {
  long long inter = 0, inter_rel = 0, gold_rel = 0;
  for (const auto& [entity, rel] : gold) {
    gold_rel += rel;
    if (predicted.count(entity)) {
      ++inter;
      inter_rel += rel;
    }
  }
  EntityTriple t;
  if (predicted.empty())
    t.prec = gold.empty() ? 1.0 : 0.0;
  else
    t.prec = static_cast<double>(inter) / static_cast<double>(predicted.size());
  if (gold.empty()) {
    t.rec = predicted.empty() ? 1.0 : 0.0;
    t.rec_star = t.rec;
  } else {
    t.rec = static_cast<double>(inter) / static_cast<double>(gold.size());
    t.rec_star = static_cast<double>(inter_rel) / static_cast<double>(gold_rel);
  }
  return t;
}

EntityEvalResult aggregate_entity_metrics(const std::vector<EntityJudgment>& queries) {
  if (queries.empty()) throw SchemaError("<run>", "queries", "nothing to evaluate");
  EntityEvalResult out;
  out.per_query.reserve(queries.size());
  long long inter = 0, pred = 0, gold = 0, inter_rel = 0, gold_rel = 0;
  double mp = 0, mr = 0, mrs = 0;
  for (const EntityJudgment& q : queries) {
    EntityTriple t = entity_metrics(q.predicted, q.gold);
    mp += t.prec;
    mr += t.rec;
    mrs += t.rec_star;
    out.per_query.push_back(t);
    pred += static_cast<long long>(q.predicted.size());
    gold += static_cast<long long>(q.gold.size());
    for (const auto& [entity, rel] : q.gold) {
      gold_rel += rel;
      if (q.predicted.count(entity)) {
        ++inter;
        inter_rel += rel;
      }
    }
  }
  const double n = static_cast<double>(queries.size());
  out.macro = {mp / n, mr / n, mrs / n};
  out.micro.prec = pred == 0 ? (gold == 0 ? 1.0 : 0.0)
                             : static_cast<double>(inter) / static_cast<double>(pred);
  out.micro.rec = gold == 0 ? (pred == 0 ? 1.0 : 0.0)
                            : static_cast<double>(inter) / static_cast<double>(gold);
  out.micro.rec_star =
      gold_rel == 0
          ? (pred == 0 ? 1.0 : 0.0)
          : static_cast<double>(inter_rel) / static_cast<double>(gold_rel);
  return out;
}

namespace {

std::vector<EntityId> linked_multiset(const std::vector<Part>& parts) {
  std::vector<EntityId> out;
  for (const Part& p : parts)
    if (p.entity) out.push_back(*p.entity);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

MatchGrade match_interpretation(const std::vector<Part>& predicted,
                                const std::vector<Part>& gold) {
  if (predicted == gold) return MatchGrade::kComplete;
  if (linked_multiset(predicted) == linked_multiset(gold))
    return MatchGrade::kPartial;
  return MatchGrade::kNone;
}

// --- Run files ---------------------------------------------------------------

namespace {

using nlohmann::json;

json part_to_json(const Part& p) {
  return json{{"text", p.text},
              {"entity", p.entity ? json(*p.entity) : json(nullptr)}};
}

Part part_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    throw SchemaError(where, "parts.text", "must be a string");
  Part p;
  p.text = j["text"].get<std::string>();
  if (p.text.empty()) throw SchemaError(where, "parts.text", "must be non-empty");
  if (!j.contains("entity"))
    throw SchemaError(where, "parts.entity", "missing field");
  if (j["entity"].is_null())
    p.entity = std::nullopt;
  else if (j["entity"].is_string() && !j["entity"].get<std::string>().empty())
    p.entity = j["entity"].get<std::string>();
  else
    throw SchemaError(where, "parts.entity", "must be null or a non-empty string");
  return p;
}

}  // namespace

std::vector<RunRecord> load_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    RunRecord r;
    if (!j.is_object() || !j.contains("query_id") || !j["query_id"].is_string())
      throw ParseError(path.string(), lineno, "record needs a string query_id");
    r.query_id = j["query_id"].get<std::string>();
    if (!j.contains("interpretations") || !j["interpretations"].is_array())
      throw SchemaError(r.query_id, "interpretations", "must be an array");
    for (const json& ij : j["interpretations"]) {
      RunInterpretation ri;
      if (!ij.is_object() || !ij.contains("parts") || !ij["parts"].is_array() ||
          ij["parts"].empty())
        throw SchemaError(r.query_id, "parts", "must be a non-empty array");
      for (const json& pj : ij["parts"])
        ri.parts.push_back(part_from_json(pj, r.query_id));
      if (ij.contains("score")) {
        if (!ij["score"].is_number())
          throw SchemaError(r.query_id, "score", "must be a number");
        ri.score = ij["score"].get<double>();
      }
      r.interpretations.push_back(std::move(ri));
    }
    if (j.contains("latency_ms") && !j["latency_ms"].is_null()) {
      if (!j["latency_ms"].is_number())
        throw SchemaError(r.query_id, "latency_ms", "must be a number");
      r.latency_ms = j["latency_ms"].get<double>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_run(const std::filesystem::path& path,
              const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const RunRecord& r : records) {
    json interps = json::array();
    for (const RunInterpretation& ri : r.interpretations) {
      json parts = json::array();
      for (const Part& p : ri.parts) parts.push_back(part_to_json(p));
      interps.push_back(json{{"parts", std::move(parts)}, {"score", ri.score}});
    }
    json j = {{"query_id", r.query_id}, {"interpretations", std::move(interps)}};
    if (r.latency_ms) j["latency_ms"] = *r.latency_ms;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// --- Interpretation metrics ---------------------------------------------------

namespace {

struct GoldClass {
  int grade = 0;  // max grade among kept members
  std::vector<const GroundTruthInterpretation*> members;
};

struct PerQuerySide {
  double r, r_star, p, f1;
};

PerQuerySide side_metrics(std::size_t gold_classes, long long gold_grades,
                          std::size_t matched_classes, long long matched_grades,
                          std::size_t predictions, std::size_t matching_preds) {
  PerQuerySide m{};
  if (gold_classes == 0) {
    m.r = predictions == 0 ? 1.0 : 0.0;
    m.r_star = m.r;
  } else {
    m.r = static_cast<double>(matched_classes) / static_cast<double>(gold_classes);
    m.r_star =
        static_cast<double>(matched_grades) / static_cast<double>(gold_grades);
  }
  if (predictions == 0)
    m.p = gold_classes == 0 ? 1.0 : 0.0;
  else
    m.p = static_cast<double>(matching_preds) / static_cast<double>(predictions);
  m.f1 = (m.p + m.r) == 0.0 ? 0.0 : 2.0 * m.p * m.r / (m.p + m.r);
  return m;
}

}  // namespace

InterpEvalResult interpretation_metrics(const std::vector<RunRecord>& run,
                                        const std::vector<GroundTruthRecord>& corpus,
                                        int min_grade, int top_k) {
  if (run.empty()) throw SchemaError("<run>", "records", "nothing to evaluate");
  std::unordered_map<std::string, const GroundTruthRecord*> by_id;
  for (const auto& r : corpus) by_id.emplace(r.id, &r);

  double sp_r = 0, sp_rs = 0, sp_p = 0, sp_f1 = 0;
  double sc_r = 0, sc_rs = 0, sc_p = 0, sc_f1 = 0;
  double latency_sum = 0;
  int latency_count = 0;

  for (const RunRecord& rr : run) {
    auto it = by_id.find(rr.query_id);
    if (it == by_id.end())
      throw SchemaError(rr.query_id, "query_id", "not present in the corpus");
    const GroundTruthRecord& gt = *it->second;

    std::map<int, GoldClass> classes;
    for (const GroundTruthInterpretation& gi : gt.interpretations) {
      if (gi.grade < min_grade) continue;
      GoldClass& c = classes[gi.equivalence_class];
      c.grade = std::max(c.grade, gi.grade);
      c.members.push_back(&gi);
    }

    // Ranked prediction cutoff: highest scores first, file order on ties.
    std::vector<const RunInterpretation*> preds;
    preds.reserve(rr.interpretations.size());
    for (const auto& ri : rr.interpretations) preds.push_back(&ri);
    std::stable_sort(preds.begin(), preds.end(),
                     [](const RunInterpretation* a, const RunInterpretation* b) {
                       return a->score > b->score;
                     });
    if (top_k > 0 && preds.size() > static_cast<std::size_t>(top_k))
      preds.resize(static_cast<std::size_t>(top_k));

    std::size_t part_matched = 0, comp_matched = 0;
    long long part_grades = 0, comp_grades = 0, gold_grades = 0;
    std::vector<bool> pred_part(preds.size(), false), pred_comp(preds.size(), false);
    for (const auto& [class_id, c] : classes) {
      gold_grades += c.grade;
      bool class_part = false, class_comp = false;
      for (std::size_t pi = 0; pi < preds.size(); ++pi) {
        for (const GroundTruthInterpretation* m : c.members) {
          MatchGrade g = match_interpretation(preds[pi]->parts, m->parts);
          if (g == MatchGrade::kNone) continue;
          class_part = true;
          pred_part[pi] = true;
          if (g == MatchGrade::kComplete) {
            class_comp = true;
            pred_comp[pi] = true;
          }
        }
      }
      if (class_part) {
        ++part_matched;
        part_grades += c.grade;
      }
      if (class_comp) {
        ++comp_matched;
        comp_grades += c.grade;
      }
    }
    std::size_t preds_part = std::count(pred_part.begin(), pred_part.end(), true);
    std::size_t preds_comp = std::count(pred_comp.begin(), pred_comp.end(), true);

    PerQuerySide part = side_metrics(classes.size(), gold_grades, part_matched,
                                     part_grades, preds.size(), preds_part);
    PerQuerySide comp = side_metrics(classes.size(), gold_grades, comp_matched,
                                     comp_grades, preds.size(), preds_comp);
    sp_r += part.r;
    sp_rs += part.r_star;
    sp_p += part.p;
    sp_f1 += part.f1;
    sc_r += comp.r;
    sc_rs += comp.r_star;
    sc_p += comp.p;
    sc_f1 += comp.f1;

    if (rr.latency_ms) {
      latency_sum += *rr.latency_ms;
      ++latency_count;
    }
  }

  const double n = static_cast<double>(run.size());
  InterpEvalResult out;
  out.partial = {sp_r / n, sp_rs / n, sp_p / n, sp_f1 / n};
  out.complete = {sc_r / n, sc_rs / n, sc_p / n, sc_f1 / n};
  out.queries = static_cast<int>(run.size());
  if (latency_count > 0) out.mean_latency_ms = latency_sum / latency_count;
  return out;
}

Interpretation baseline_top1(const KnowledgeSnapshot& snapshot, const Query& query,
                             const EngineConfig& config) {
  LinkPhaseResult linked = link_phase(snapshot, query, config);
  const Segmentation& skeleton = linked.skeletons.retained.front();

  Interpretation interp;
  interp.parts.reserve(skeleton.segments.size());
  for (const Segment& seg : skeleton.segments) {
    std::optional<EntityId> best;
    double best_cmn = 0.0;
    if (const auto* cands = linked.candidates.find(seg.start, seg.end)) {
      for (const Candidate& c : *cands) {
        auto cmn = snapshot.commonness(seg.text, c.entity);
        if (!cmn || *cmn <= 0.0) continue;
        if (!best || *cmn > best_cmn || (*cmn == best_cmn && c.entity < *best)) {
          best = c.entity;
          best_cmn = *cmn;
        }
      }
    }
    interp.parts.push_back(LinkedSegment{seg, std::move(best)});
  }
  score_interpretation(snapshot, interp, config.weights);
  return interp;
}

}  // namespace qinterp
