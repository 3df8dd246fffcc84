#ifndef QINTERP_CORPUS_HPP
#define QINTERP_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qinterp/kbstore.hpp"

namespace qinterp {

enum class QueryCategory : std::uint8_t {
  kCategorical = 0,
  kConceptual,
  kQuestion,
  kRelational,
  kSurface,
};

const char* category_name(QueryCategory c);
std::optional<QueryCategory> category_from_name(std::string_view name);

enum class EntityKindTag : std::uint8_t { kExplicit = 0, kImplicit };

struct GroundTruthEntity {
  std::optional<std::pair<int, int>> span;  // term index range; absent for
                                            // implicit entities
  std::string entity;                       // entity id or external URL
  EntityKindTag kind = EntityKindTag::kExplicit;
  int relevance = 1;  // 1 = might be intended, 2 = very likely intended
};

// One segment of a ground-truth or system interpretation.
struct Part {
  std::string text;
  std::optional<EntityId> entity;

  bool operator==(const Part&) const = default;
};

struct GroundTruthInterpretation {
  std::vector<Part> parts;
  int grade = 1;  // 1 plausible, 2 moderately likely, 3 very likely
  int equivalence_class = 0;
};

struct GroundTruthRecord {
  std::string id;
  std::string query;
  QueryCategory category = QueryCategory::kCategorical;
  int difficulty = 1;  // 1..5
  std::string cluster;
  std::vector<GroundTruthEntity> entities;
  std::vector<GroundTruthInterpretation> interpretations;  // never empty
};

// Loads and validates a line-delimited corpus file (one JSON record per
// line). Throws ParseError for malformed JSON and SchemaError (with record
// id and field) for invariant violations.
std::vector<GroundTruthRecord> load_corpus(const std::filesystem::path& path);

// Distribution distance of a candidate split: the sum over both sides and
// both features (category; query length bucketed 1..7 and 8+) of the
// absolute difference between the side's value proportions and the whole
// corpus's. An empty side contributes all-zero proportions.
double split_error(const std::vector<GroundTruthRecord>& whole,
                   const std::vector<std::string>& train_ids,
                   const std::vector<std::string>& test_ids);

struct Split {
  std::vector<std::string> train_ids;  // corpus order
  std::vector<std::string> test_ids;   // corpus order
  double error = 0.0;                  // achieved split_error
  double ratio = 0.8;                  // target train share
  std::uint64_t seed = 0;
  long long iterations = 0;        // exchanges attempted
  bool reached_threshold = false;  // false = best-effort result
};

// Cluster-respecting train/test split by hill climbing: start from a seeded
// random assignment of whole clusters near `ratio`, then repeatedly swap a
// random train cluster with a random test cluster, accepting swaps that do
// not increase the error and keep the train share within 2 points of
// `ratio`, until the error drops to `error_threshold` or `max_iters` swaps
// were tried. Deterministic for a fixed seed.
Split split_corpus(const std::vector<GroundTruthRecord>& records, double ratio,
                   double error_threshold, std::uint64_t seed,
                   long long max_iters = 100000);

}  // namespace qinterp

#endif  // QINTERP_CORPUS_HPP
