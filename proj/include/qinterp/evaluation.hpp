#ifndef QINTERP_EVALUATION_HPP
#define QINTERP_EVALUATION_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qinterp/config.hpp"
#include "qinterp/corpus.hpp"
#include "qinterp/interpreter.hpp"

namespace qinterp {

// --- Entity-level metrics ---------------------------------------------------

struct EntityTriple {
  double prec = 0.0;
  double rec = 0.0;
  double rec_star = 0.0;  // relevance-weighted recall
};

// Piecewise precision / recall / weighted recall of one query's predicted
// entity set against the gold set (entity -> relevance weight):
// both sets empty scores (1,1,1); an empty prediction against non-empty gold
// scores precision 0; an empty gold against a non-empty prediction scores
// recall (and weighted recall) 0.
EntityTriple entity_metrics(const std::set<EntityId>& predicted,
                            const std::map<EntityId, int>& gold);

struct EntityJudgment {
  std::set<EntityId> predicted;
  std::map<EntityId, int> gold;  // entity -> relevance (1 or 2)
};

struct EntityEvalResult {
  std::vector<EntityTriple> per_query;
  EntityTriple micro;  // pooled counts across queries
  EntityTriple macro;  // unweighted mean of per-query values
};

// Micro pooling uses summed intersection/prediction/gold sizes (relevance
// sums for weighted recall); a pooled zero denominator follows the same
// empty-set conventions as the per-query formulas.
EntityEvalResult aggregate_entity_metrics(const std::vector<EntityJudgment>& queries);

// --- Interpretation-level metrics -------------------------------------------

enum class MatchGrade : std::uint8_t { kNone = 0, kPartial, kComplete };

// complete: identical parts (segment boundaries and links); partial: the
// multisets of linked entities agree but the segmentation differs; none
// otherwise. complete implies partial.
MatchGrade match_interpretation(const std::vector<Part>& predicted,
                                const std::vector<Part>& gold);

struct RunInterpretation {
  std::vector<Part> parts;
  double score = 0.0;
};

struct RunRecord {
  std::string query_id;
  std::vector<RunInterpretation> interpretations;  // ranked best-first
  std::optional<double> latency_ms;
};

// Line-delimited run files: {query_id, interpretations:[{parts, score}],
// latency_ms?} per line.
std::vector<RunRecord> load_run(const std::filesystem::path& path);
void save_run(const std::filesystem::path& path,
              const std::vector<RunRecord>& records);

struct InterpSideMetrics {
  double r = 0.0;       // matched gold classes / gold classes
  double r_star = 0.0;  // grade-weighted recall (class grade = max member)
  double p = 0.0;       // matching predictions / predictions
  double f1 = 0.0;      // harmonic mean, 0 when p + r == 0
};

struct InterpEvalResult {
  InterpSideMetrics partial;   // predictions matched at >= partial
  InterpSideMetrics complete;  // predictions matched at complete only
  int queries = 0;
  std::optional<double> mean_latency_ms;
};

// Macro-averaged interpretation metrics of a run against ground truth.
// Gold interpretations below `min_grade` are ignored; the rest collapse by
// equivalence class (matching any member matches the class, each class
// counts once). top_k > 0 restricts each query's predictions to its k
// highest-scoring ones. Throws SchemaError for run ids absent from the
// corpus.
InterpEvalResult interpretation_metrics(const std::vector<RunRecord>& run,
                                        const std::vector<GroundTruthRecord>& corpus,
                                        int min_grade = 2, int top_k = 0);

// Sanity baseline: one interpretation on the top-ranked retained skeleton,
// linking every segment to its highest-commonness candidate (unlinked when
// none has positive commonness).
Interpretation baseline_top1(const KnowledgeSnapshot& snapshot, const Query& query,
                             const EngineConfig& config);

}  // namespace qinterp

#endif  // QINTERP_EVALUATION_HPP
