#ifndef QINTERP_KBSTORE_HPP
#define QINTERP_KBSTORE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qinterp {

using EntityId = std::string;

// Alias provenance, in candidate-ordering rank: titles before redirects
// before disambiguation-page members.
enum class AliasSource : std::uint8_t {
  kTitle = 0,
  kRedirect = 1,
  kDisambiguation = 2,
};

const char* alias_source_name(AliasSource source);
std::optional<AliasSource> alias_source_from_name(std::string_view name);

struct AliasEntry {
  EntityId entity;
  AliasSource source;
};

struct FuzzyMatch {
  EntityId entity;
  double score = 0.0;  // in (0, 1], 1.0 for an exact surface
};

struct StoreInfo {
  std::uint64_t records = 0;
  std::string checksum;  // FNV-1a 64 over the serialized store, hex
};

struct BuildInfo {
  std::uint32_t embedding_dim = 0;
  StoreInfo aliases;
  StoreInfo anchors;
  StoreInfo ngrams;
  StoreInfo embeddings;
};

// Embedding key for an entity id ("ENTITY/" prefix); word keys are bare.
std::string entity_embedding_key(const EntityId& entity);

// Cosine similarity; 0 when either vector is empty, mismatched, or zero-norm.
double cosine(const std::vector<float>& a, const std::vector<float>& b);

// Immutable bundle of the four precomputed stores. Built once via
// SnapshotBuilder or ingest_snapshot(), then safely shared across threads.
class KnowledgeSnapshot {
 public:
  // All entities whose alias equals `surface`, ordered by source rank then
  // entity id. Empty when the surface is unknown. `surface` must already be
  // normalized.
  std::vector<EntityId> exact_lookup(std::string_view surface) const;

  // Raw alias entries for a surface, nullptr when absent.
  const std::vector<AliasEntry>* alias_entries(std::string_view surface) const;

  // True when the surface is a title or redirect (disambiguation-only
  // surfaces do not count).
  bool has_title_or_redirect(std::string_view surface) const;

  // Up to `depth` entities ranked by trigram-set similarity of their alias
  // surfaces against `surface`. Entities of an exactly matching surface come
  // first with score 1.0. Throws QueryError on an empty surface.
  std::vector<FuzzyMatch> fuzzy_lookup(std::string_view surface, int depth) const;

  // Exact n-gram frequency; nullopt when the table has no entry (distinct
  // from a stored frequency of 0).
  std::optional<std::int64_t> ngram_frequency(std::string_view ngram) const;

  // count(mention links to entity) / count(mention used as anchor).
  // 0 when the entity never appears for that anchor; nullopt when the
  // mention has no anchor statistics at all.
  std::optional<double> commonness(std::string_view mention,
                                   std::string_view entity) const;

  // Stored embedding vector, nullptr when absent. Entity keys carry the
  // ENTITY/ prefix, word keys are bare.
  const std::vector<float>* embedding_of(std::string_view key) const;

  std::uint32_t embedding_dim() const { return info_.embedding_dim; }
  const BuildInfo& build_info() const { return info_; }

  // All alias surfaces, lexicographically sorted.
  const std::vector<std::string>& alias_surfaces() const { return surfaces_; }

  // Persists the snapshot as a directory of binary store files plus a
  // manifest with record counts and checksums.
  void save(const std::filesystem::path& dir) const;

  // Reopens a persisted snapshot, verifying manifest counts and checksums.
  static KnowledgeSnapshot load(const std::filesystem::path& dir);

 private:
  friend class SnapshotBuilder;
  KnowledgeSnapshot() = default;

  void build_derived();

  struct Anchor {
    std::int64_t total = 0;
    std::vector<std::pair<EntityId, std::int64_t>> counts;  // sorted by entity
  };

  std::unordered_map<std::string, std::vector<AliasEntry>> aliases_;
  std::unordered_map<std::string, Anchor> anchors_;
  std::unordered_map<std::string, std::int64_t> ngrams_;
  std::unordered_map<std::string, std::vector<float>> embeddings_;
  BuildInfo info_;

  // Derived, rebuilt after construction/load: sorted surfaces and the
  // character-trigram inverted index over them.
  std::vector<std::string> surfaces_;
  std::vector<std::uint32_t> surface_gram_counts_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> trigrams_;
};

// Accumulates store entries (normalizing surfaces, validating invariants)
// and produces an immutable snapshot. Duplicate identical entries are
// dropped; duplicates with conflicting values are errors.
class SnapshotBuilder {
 public:
  SnapshotBuilder& add_alias(std::string_view surface, std::string_view entity,
                             AliasSource source);
  SnapshotBuilder& add_anchor(std::string_view anchor, std::string_view entity,
                              std::int64_t count);
  SnapshotBuilder& add_ngram(std::string_view ngram, std::int64_t frequency);
  SnapshotBuilder& add_embedding(std::string_view key, std::vector<float> vec);

  KnowledgeSnapshot build();

 private:
  KnowledgeSnapshot snap_;
  std::uint32_t dim_ = 0;
};

// Parses the four tabular store files, builds the snapshot, persists it at
// out_dir, and returns it. Parse failures report file and line number.
KnowledgeSnapshot ingest_snapshot(const std::filesystem::path& aliases_tsv,
                                  const std::filesystem::path& anchors_tsv,
                                  const std::filesystem::path& ngrams_tsv,
                                  const std::filesystem::path& embeddings_txt,
                                  const std::filesystem::path& out_dir);

}  // namespace qinterp

#endif  // QINTERP_KBSTORE_HPP
