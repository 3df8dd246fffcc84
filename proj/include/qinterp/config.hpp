#pragma once

namespace qinterp {

// Weights of the three per-entity evidence signals combined by the
// interpretation scorer: commonness, relatedness, and query-context fit.
struct ScoringWeights {
  double alpha = 1.0;  // commonness
  double beta = 1.0;   // relatedness
  double gamma = 1.0;  // context
};

struct EngineConfig {
  // Segmentations scoring below this fraction of the previously retained
  // one close the skeleton set.
  double threshold = 0.66;

  // Maximum number of entities returned per segment by fuzzy lookup.
  int fuzzy_depth = 150;

  ScoringWeights weights;

  // Upper bound on interpretations enumerated per skeleton; beyond it the
  // candidate grid is truncated.
  long long combinatorial_cap = 10000;

  // Queries longer than this are rejected up front (the segmentation space
  // doubles per extra term).
  int max_query_terms = 16;

  // Keep only the best k interpretations in responses; 0 keeps all.
  int top_k = 0;

  // Run segment scoring and candidate lookup on separate threads.
  bool parallel_phases = true;
};

}  // namespace qinterp
