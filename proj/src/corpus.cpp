#include "qinterp/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "qinterp/errors.hpp"
#include "qinterp/text.hpp"

namespace qinterp {

namespace {

constexpr int kCategories = 5;
constexpr int kLengthBuckets = 8;  // 1..7 terms, then 8+

int length_bucket(const std::string& query) {
  std::string norm = normalize(query);
  int terms = norm.empty() ? 0 : static_cast<int>(split_terms(norm).size());
  if (terms < 1) terms = 1;
  return std::min(terms, kLengthBuckets) - 1;
}

}  // namespace

const char* category_name(QueryCategory c) {
  switch (c) {
    case QueryCategory::kCategorical: return "categorical";
    case QueryCategory::kConceptual: return "conceptual";
    case QueryCategory::kQuestion: return "question";
    case QueryCategory::kRelational: return "relational";
    case QueryCategory::kSurface: return "surface";
  }
  return "unknown";
}

std::optional<QueryCategory> category_from_name(std::string_view name) {
  if (name == "categorical") return QueryCategory::kCategorical;
  if (name == "conceptual") return QueryCategory::kConceptual;
  if (name == "question") return QueryCategory::kQuestion;
  if (name == "relational") return QueryCategory::kRelational;
  if (name == "surface") return QueryCategory::kSurface;
  return std::nullopt;
}

namespace {

using nlohmann::json;

// json::at with a SchemaError instead of a bare json exception.
const json& field(const json& j, const char* name, const std::string& record_id) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(record_id, name, "missing field");
  return *it;
}

std::string string_field(const json& j, const char* name,
                         const std::string& record_id) {
  const json& f = field(j, name, record_id);
  if (!f.is_string()) throw SchemaError(record_id, name, "must be a string");
  return f.get<std::string>();
}

int int_field(const json& j, const char* name, const std::string& record_id) {
  const json& f = field(j, name, record_id);
  if (!f.is_number_integer())
    throw SchemaError(record_id, name, "must be an integer");
  return f.get<int>();
}

GroundTruthEntity parse_entity(const json& j, const std::string& record_id) {
  if (!j.is_object()) throw SchemaError(record_id, "entities", "must be objects");
  GroundTruthEntity e;
  const json& span = field(j, "span", record_id);
  if (span.is_null()) {
    e.span = std::nullopt;
  } else if (span.is_array() && span.size() == 2 && span[0].is_number_integer() &&
             span[1].is_number_integer()) {
    int start = span[0].get<int>(), end = span[1].get<int>();
    if (start < 0 || end < start)
      throw SchemaError(record_id, "span", "must satisfy 0 <= start <= end");
    e.span = std::make_pair(start, end);
  } else {
    throw SchemaError(record_id, "span", "must be null or [start, end]");
  }
  e.entity = string_field(j, "entity", record_id);
  if (e.entity.empty()) throw SchemaError(record_id, "entity", "must be non-empty");
  std::string kind = string_field(j, "kind", record_id);
  if (kind == "explicit")
    e.kind = EntityKindTag::kExplicit;
  else if (kind == "implicit")
    e.kind = EntityKindTag::kImplicit;
  else
    throw SchemaError(record_id, "kind", "must be 'explicit' or 'implicit'");
  e.relevance = int_field(j, "relevance", record_id);
  if (e.relevance != 1 && e.relevance != 2)
    throw SchemaError(record_id, "relevance", "must be 1 or 2");
  return e;
}

GroundTruthInterpretation parse_interpretation(const json& j,
                                               const std::string& record_id,
                                               const std::string& query_norm) {
  if (!j.is_object())
    throw SchemaError(record_id, "interpretations", "must be objects");
  GroundTruthInterpretation gi;
  const json& parts = field(j, "parts", record_id);
  if (!parts.is_array() || parts.empty())
    throw SchemaError(record_id, "parts", "must be a non-empty array");
  std::string joined;
  for (const json& pj : parts) {
    if (!pj.is_object()) throw SchemaError(record_id, "parts", "must be objects");
    Part p;
    p.text = string_field(pj, "text", record_id);
    if (p.text.empty()) throw SchemaError(record_id, "parts.text", "must be non-empty");
    const json& ej = field(pj, "entity", record_id);
    if (ej.is_null()) {
      p.entity = std::nullopt;
    } else if (ej.is_string() && !ej.get<std::string>().empty()) {
      p.entity = ej.get<std::string>();
    } else {
      throw SchemaError(record_id, "parts.entity", "must be null or a non-empty string");
    }
    if (!joined.empty()) joined += ' ';
    joined += p.text;
    gi.parts.push_back(std::move(p));
  }
  if (joined != query_norm)
    throw SchemaError(record_id, "parts",
                      "segments must concatenate to the query ('" + joined +
                          "' vs '" + query_norm + "')");
  gi.grade = int_field(j, "grade", record_id);
  if (gi.grade < 1 || gi.grade > 3)
    throw SchemaError(record_id, "grade", "must be 1, 2, or 3");
  gi.equivalence_class = int_field(j, "equivalence_class", record_id);
  return gi;
}

}  // namespace

std::vector<GroundTruthRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<GroundTruthRecord> records;
  std::set<std::string> ids;
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
    if (!j.is_object()) throw ParseError(path.string(), lineno, "record must be an object");

    GroundTruthRecord r;
    r.id = string_field(j, "id", "<line " + std::to_string(lineno) + ">");
    if (r.id.empty())
      throw SchemaError("<line " + std::to_string(lineno) + ">", "id",
                        "must be non-empty");
    if (!ids.insert(r.id).second)
      throw SchemaError(r.id, "id", "duplicate record id");
    r.query = string_field(j, "query", r.id);
    std::string query_norm = normalize(r.query);
    if (query_norm.empty()) throw SchemaError(r.id, "query", "must be non-empty");
    std::string cat = string_field(j, "category", r.id);
    auto category = category_from_name(cat);
    if (!category)
      throw SchemaError(r.id, "category", "unknown category '" + cat + "'");
    r.category = *category;
    r.difficulty = int_field(j, "difficulty", r.id);
    if (r.difficulty < 1 || r.difficulty > 5)
      throw SchemaError(r.id, "difficulty", "must be in 1..5");
    r.cluster = string_field(j, "cluster", r.id);
    if (r.cluster.empty()) throw SchemaError(r.id, "cluster", "must be non-empty");

    const json& entities = field(j, "entities", r.id);
    if (!entities.is_array())
      throw SchemaError(r.id, "entities", "must be an array");
    for (const json& ej : entities) r.entities.push_back(parse_entity(ej, r.id));

    const json& interps = field(j, "interpretations", r.id);
    if (!interps.is_array() || interps.empty())
      throw SchemaError(r.id, "interpretations",
                        "every record needs at least one interpretation");
    for (const json& ij : interps)
      r.interpretations.push_back(parse_interpretation(ij, r.id, query_norm));

    records.push_back(std::move(r));
  }
  return records;
}

namespace {

struct FeatureCounts {
  std::array<long long, kCategories> cat{};
  std::array<long long, kLengthBuckets> len{};
  long long size = 0;

  void add(const FeatureCounts& o) {
    for (int i = 0; i < kCategories; ++i) cat[i] += o.cat[i];
    for (int i = 0; i < kLengthBuckets; ++i) len[i] += o.len[i];
    size += o.size;
  }
  void sub(const FeatureCounts& o) {
    for (int i = 0; i < kCategories; ++i) cat[i] -= o.cat[i];
    for (int i = 0; i < kLengthBuckets; ++i) len[i] -= o.len[i];
    size -= o.size;
  }
};

FeatureCounts record_features(const GroundTruthRecord& r) {
  FeatureCounts f;
  f.cat[static_cast<int>(r.category)] = 1;
  f.len[length_bucket(r.query)] = 1;
  f.size = 1;
  return f;
}

// Sum over both features of |side proportion - whole proportion|.
double side_error(const FeatureCounts& side, const FeatureCounts& whole) {
  double err = 0.0;
  auto prop = [](long long count, long long size) {
    return size == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(size);
  };
  for (int i = 0; i < kCategories; ++i)
    err += std::abs(prop(side.cat[i], side.size) - prop(whole.cat[i], whole.size));
  for (int i = 0; i < kLengthBuckets; ++i)
    err += std::abs(prop(side.len[i], side.size) - prop(whole.len[i], whole.size));
  return err;
}

double total_error(const FeatureCounts& train, const FeatureCounts& test,
                   const FeatureCounts& whole) {
  return side_error(train, whole) + side_error(test, whole);
}

}  // namespace

double split_error(const std::vector<GroundTruthRecord>& whole,
                   const std::vector<std::string>& train_ids,
                   const std::vector<std::string>& test_ids) {
  std::unordered_map<std::string, const GroundTruthRecord*> by_id;
  for (const auto& r : whole) by_id.emplace(r.id, &r);
  auto gather = [&](const std::vector<std::string>& ids) {
    FeatureCounts f;
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        throw SchemaError(id, "id", "split id not present in corpus");
      f.add(record_features(*it->second));
    }
    return f;
  };
  FeatureCounts train = gather(train_ids);
  FeatureCounts test = gather(test_ids);
  FeatureCounts all;
  for (const auto& r : whole) all.add(record_features(r));
  return total_error(train, test, all);
}

Split split_corpus(const std::vector<GroundTruthRecord>& records, double ratio,
                   double error_threshold, std::uint64_t seed,
                   long long max_iters) {
  if (records.empty()) throw SchemaError("<corpus>", "records", "empty corpus");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw SchemaError("<corpus>", "ratio", "must be in (0,1)");

  // Clusters in lexicographic name order, then features per cluster.
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i)
    members[records[i].cluster].push_back(i);
  struct Cluster {
    FeatureCounts features;
    std::vector<std::size_t> records;
  };
  std::vector<Cluster> clusters;
  clusters.reserve(members.size());
  for (auto& [name, idxs] : members) {
    Cluster c;
    c.records = std::move(idxs);
    for (std::size_t i : c.records) c.features.add(record_features(records[i]));
    clusters.push_back(std::move(c));
  }

  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  // Seeded random order, then fill the train side up to the target size.
  std::vector<std::size_t> order(clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[pick(i)]);

  FeatureCounts whole;
  for (const auto& c : clusters) whole.add(c.features);
  const double target = ratio * static_cast<double>(whole.size);

  std::vector<std::size_t> train_clusters, test_clusters;
  FeatureCounts train, test;
  for (std::size_t ci : order) {
    if (static_cast<double>(train.size) < target) {
      train_clusters.push_back(ci);
      train.add(clusters[ci].features);
    } else {
      test_clusters.push_back(ci);
      test.add(clusters[ci].features);
    }
  }

  Split out;
  out.ratio = ratio;
  out.seed = seed;
  double error = total_error(train, test, whole);

  auto train_share = [&](const FeatureCounts& t) {
    return static_cast<double>(t.size) / static_cast<double>(whole.size);
  };

  long long iters = 0;
  while (error > error_threshold && iters < max_iters &&
         !train_clusters.empty() && !test_clusters.empty()) {
    ++iters;
    std::size_t ti = pick(train_clusters.size());
    std::size_t si = pick(test_clusters.size());
    const FeatureCounts& a = clusters[train_clusters[ti]].features;
    const FeatureCounts& b = clusters[test_clusters[si]].features;

    FeatureCounts new_train = train, new_test = test;
    new_train.sub(a);
    new_train.add(b);
    new_test.sub(b);
    new_test.add(a);
    double new_error = total_error(new_train, new_test, whole);
    if (new_error <= error && std::abs(train_share(new_train) - ratio) <= 0.02) {
      std::swap(train_clusters[ti], test_clusters[si]);
      train = new_train;
      test = new_test;
      error = new_error;
    }
  }

  out.error = error;
  out.iterations = iters;
  out.reached_threshold = error <= error_threshold;

  std::vector<bool> in_train(records.size(), false);
  for (std::size_t ci : train_clusters)
    for (std::size_t ri : clusters[ci].records) in_train[ri] = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (in_train[i])
      out.train_ids.push_back(records[i].id);
    else
      out.test_ids.push_back(records[i].id);
  }
  return out;
}

}  // namespace qinterp
