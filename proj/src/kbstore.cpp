#include "qinterp/kbstore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qinterp/errors.hpp"
#include "qinterp/text.hpp"

namespace qinterp {

namespace {

constexpr char kPad = '\x01';
constexpr std::uint32_t kFormatVersion = 1;
constexpr char kMagic[4] = {'Q', 'I', 'S', 'N'};

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

bool valid_entity_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
      return false;
  }
  return true;
}

// Distinct character trigrams of the padded surface.
std::vector<std::string> trigram_set(std::string_view surface) {
  std::string padded;
  padded.reserve(surface.size() + 2);
  padded.push_back(kPad);
  padded.append(surface);
  padded.push_back(kPad);
  std::set<std::string> grams;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    grams.insert(padded.substr(i, 3));
  }
  return {grams.begin(), grams.end()};
}

struct ByteWriter {
  std::string buf;

  void put_u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
  void put_f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(bits);
  }
  void put_str(std::string_view s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    buf.append(s);
  }
};

struct ByteReader {
  std::string_view buf;
  std::size_t pos = 0;
  std::string context;

  void need(std::size_t n) {
    if (pos + n > buf.size())
      throw SnapshotError(context + ": truncated store file");
  }
  std::uint8_t get_u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
  float get_f32() {
    std::uint32_t bits = get_u32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string get_str() {
    std::uint32_t n = get_u32();
    need(n);
    std::string s(buf.substr(pos, n));
    pos += n;
    return s;
  }
  bool done() const { return pos == buf.size(); }
};

template <typename Map>
std::vector<const typename Map::value_type*> sorted_items(const Map& m) {
  std::vector<const typename Map::value_type*> items;
  items.reserve(m.size());
  for (const auto& kv : m) items.push_back(&kv);
  std::sort(items.begin(), items.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  return items;
}

}  // namespace

const char* alias_source_name(AliasSource source) {
  switch (source) {
    case AliasSource::kTitle: return "title";
    case AliasSource::kRedirect: return "redirect";
    case AliasSource::kDisambiguation: return "disambiguation";
  }
  return "unknown";
}

std::optional<AliasSource> alias_source_from_name(std::string_view name) {
  if (name == "title") return AliasSource::kTitle;
  if (name == "redirect") return AliasSource::kRedirect;
  if (name == "disambiguation") return AliasSource::kDisambiguation;
  return std::nullopt;
}

std::string entity_embedding_key(const EntityId& entity) {
  return "ENTITY/" + entity;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.empty() || a.size() != b.size()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// SnapshotBuilder

SnapshotBuilder& SnapshotBuilder::add_alias(std::string_view surface,
                                            std::string_view entity,
                                            AliasSource source) {
  std::string norm = normalize(surface);
  if (norm.empty()) throw Error("ingest", "empty alias surface");
  if (!valid_entity_id(entity))
    throw Error("ingest", "invalid entity id '" + std::string(entity) + "'");
  auto& entries = snap_.aliases_[norm];
  for (auto& e : entries) {
    if (e.entity == entity) {
      // Same pair seen again: keep the strongest source.
      if (source < e.source) e.source = source;
      return *this;
    }
  }
  entries.push_back(AliasEntry{EntityId(entity), source});
  return *this;
}

SnapshotBuilder& SnapshotBuilder::add_anchor(std::string_view anchor,
                                             std::string_view entity,
                                             std::int64_t count) {
  std::string norm = normalize(anchor);
  if (norm.empty()) throw Error("ingest", "empty anchor");
  if (!valid_entity_id(entity))
    throw Error("ingest", "invalid entity id '" + std::string(entity) + "'");
  if (count < 0) throw Error("ingest", "negative anchor count");
  auto& a = snap_.anchors_[norm];
  for (auto& [e, c] : a.counts) {
    if (e == entity) {
      if (c != count)
        throw Error("ingest", "duplicate anchor '" + norm + "' -> '" +
                                  std::string(entity) + "' with conflicting count");
      return *this;
    }
  }
  a.counts.emplace_back(EntityId(entity), count);
  return *this;
}

SnapshotBuilder& SnapshotBuilder::add_ngram(std::string_view ngram,
                                            std::int64_t frequency) {
  std::string norm = normalize(ngram);
  if (norm.empty()) throw Error("ingest", "empty n-gram");
  if (frequency < 0) throw Error("ingest", "negative n-gram frequency");
  auto [it, inserted] = snap_.ngrams_.emplace(norm, frequency);
  if (!inserted && it->second != frequency)
    throw Error("ingest", "duplicate n-gram '" + norm + "' with conflicting frequency");
  return *this;
}

SnapshotBuilder& SnapshotBuilder::add_embedding(std::string_view key,
                                                std::vector<float> vec) {
  if (key.empty()) throw Error("ingest", "empty embedding key");
  if (vec.empty()) throw Error("ingest", "empty embedding vector");
  for (float v : vec) {
    if (!std::isfinite(v))
      throw Error("ingest", "non-finite embedding component for key '" +
                                std::string(key) + "'");
  }
  if (dim_ == 0) {
    dim_ = static_cast<std::uint32_t>(vec.size());
  } else if (vec.size() != dim_) {
    throw Error("ingest", "embedding dimension mismatch for key '" + std::string(key) +
                              "': expected " + std::to_string(dim_) + ", got " +
                              std::to_string(vec.size()));
  }
  auto it = snap_.embeddings_.find(std::string(key));
  if (it != snap_.embeddings_.end()) {
    if (it->second != vec)
      throw Error("ingest", "duplicate embedding key '" + std::string(key) +
                                "' with conflicting vector");
    return *this;
  }
  snap_.embeddings_.emplace(std::string(key), std::move(vec));
  return *this;
}

namespace {

std::string serialize_aliases(
    const std::unordered_map<std::string, std::vector<AliasEntry>>& aliases) {
  ByteWriter w;
  for (const auto* kv : sorted_items(aliases)) {
    w.put_str(kv->first);
    w.put_u32(static_cast<std::uint32_t>(kv->second.size()));
    for (const auto& e : kv->second) {
      w.put_u8(static_cast<std::uint8_t>(e.source));
      w.put_str(e.entity);
    }
  }
  return std::move(w.buf);
}

std::string serialize_anchors(const auto& anchors) {
  ByteWriter w;
  for (const auto* kv : sorted_items(anchors)) {
    w.put_str(kv->first);
    w.put_u32(static_cast<std::uint32_t>(kv->second.counts.size()));
    for (const auto& [entity, count] : kv->second.counts) {
      w.put_str(entity);
      w.put_i64(count);
    }
  }
  return std::move(w.buf);
}

std::string serialize_ngrams(const std::unordered_map<std::string, std::int64_t>& ngrams) {
  ByteWriter w;
  for (const auto* kv : sorted_items(ngrams)) {
    w.put_str(kv->first);
    w.put_i64(kv->second);
  }
  return std::move(w.buf);
}

std::string serialize_embeddings(
    const std::unordered_map<std::string, std::vector<float>>& embeddings) {
  ByteWriter w;
  for (const auto* kv : sorted_items(embeddings)) {
    w.put_str(kv->first);
    for (float v : kv->second) w.put_f32(v);
  }
  return std::move(w.buf);
}

}  // namespace

KnowledgeSnapshot SnapshotBuilder::build() {
  for (auto& [surface, entries] : snap_.aliases_) {
    std::sort(entries.begin(), entries.end(), [](const AliasEntry& a, const AliasEntry& b) {
      if (a.source != b.source) return a.source < b.source;
      return a.entity < b.entity;
    });
  }
  for (auto& [anchor, a] : snap_.anchors_) {
    std::sort(a.counts.begin(), a.counts.end());
    a.total = 0;
    for (const auto& [entity, count] : a.counts) a.total += count;
  }

  snap_.info_.embedding_dim = dim_;
  snap_.info_.aliases = {snap_.aliases_.size(), to_hex(fnv1a64(serialize_aliases(snap_.aliases_)))};
  snap_.info_.anchors = {snap_.anchors_.size(), to_hex(fnv1a64(serialize_anchors(snap_.anchors_)))};
  snap_.info_.ngrams = {snap_.ngrams_.size(), to_hex(fnv1a64(serialize_ngrams(snap_.ngrams_)))};
  snap_.info_.embeddings = {snap_.embeddings_.size(),
                            to_hex(fnv1a64(serialize_embeddings(snap_.embeddings_)))};

  snap_.build_derived();
  return std::move(snap_);
}

void KnowledgeSnapshot::build_derived() {
  surfaces_.clear();
  surfaces_.reserve(aliases_.size());
  for (const auto& [surface, entries] : aliases_) surfaces_.push_back(surface);
  std::sort(surfaces_.begin(), surfaces_.end());

  trigrams_.clear();
  surface_gram_counts_.assign(surfaces_.size(), 0);
  for (std::uint32_t idx = 0; idx < surfaces_.size(); ++idx) {
    auto grams = trigram_set(surfaces_[idx]);
    surface_gram_counts_[idx] = static_cast<std::uint32_t>(grams.size());
    for (auto& g : grams) trigrams_[g].push_back(idx);
  }
}

// ---------------------------------------------------------------------------
// Lookups

std::vector<EntityId> KnowledgeSnapshot::exact_lookup(std::string_view surface) const {
  auto it = aliases_.find(std::string(surface));
  if (it == aliases_.end()) return {};
  std::vector<EntityId> out;
  out.reserve(it->second.size());
  for (const auto& e : it->second) out.push_back(e.entity);
  return out;
}

const std::vector<AliasEntry>* KnowledgeSnapshot::alias_entries(
    std::string_view surface) const {
  auto it = aliases_.find(std::string(surface));
  return it == aliases_.end() ? nullptr : &it->second;
}

bool KnowledgeSnapshot::has_title_or_redirect(std::string_view surface) const {
  const auto* entries = alias_entries(surface);
  if (!entries) return false;
  for (const auto& e : *entries) {
    if (e.source == AliasSource::kTitle || e.source == AliasSource::kRedirect)
      return true;
  }
  return false;
}

std::vector<FuzzyMatch> KnowledgeSnapshot::fuzzy_lookup(std::string_view surface,
                                                        int depth) const {
  if (surface.empty()) throw QueryError("fuzzy lookup on empty surface");
  if (depth <= 0) return {};

  std::vector<FuzzyMatch> out;
  std::set<EntityId> seen;

  // Entities of an exactly matching surface come first, at maximal score.
  const auto* exact = alias_entries(surface);
  if (exact) {
    for (const auto& e : *exact) {
      if (out.size() == static_cast<std::size_t>(depth)) return out;
      if (seen.insert(e.entity).second) out.push_back({e.entity, 1.0});
    }
  }

  auto qgrams = trigram_set(surface);
  std::unordered_map<std::uint32_t, std::uint32_t> overlap;
  for (const auto& g : qgrams) {
    auto it = trigrams_.find(g);
    if (it == trigrams_.end()) continue;
    for (std::uint32_t idx : it->second) ++overlap[idx];
  }

  struct Scored {
    double score;
    std::uint32_t idx;
  };
  std::vector<Scored> scored;
  scored.reserve(overlap.size());
  for (const auto& [idx, inter] : overlap) {
    if (exact && surfaces_[idx] == surface) continue;  // already emitted
    double denom =
        static_cast<double>(qgrams.size()) + surface_gram_counts_[idx] - inter;
    scored.push_back({inter / denom, idx});
  }
  // Surface ids are assigned in lexicographic order, so idx order breaks
  // score ties lexicographically.
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.idx < b.idx;
  });

  for (const auto& s : scored) {
    if (out.size() == static_cast<std::size_t>(depth)) break;
    const auto& entries = aliases_.at(surfaces_[s.idx]);
    for (const auto& e : entries) {
      if (out.size() == static_cast<std::size_t>(depth)) break;
      if (seen.insert(e.entity).second) out.push_back({e.entity, s.score});
    }
  }
  return out;
}

std::optional<std::int64_t> KnowledgeSnapshot::ngram_frequency(
    std::string_view ngram) const {
  auto it = ngrams_.find(std::string(ngram));
  if (it == ngrams_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> KnowledgeSnapshot::commonness(std::string_view mention,
                                                    std::string_view entity) const {
  auto it = anchors_.find(std::string(mention));
  if (it == anchors_.end()) return std::nullopt;
  const Anchor& a = it->second;
  if (a.total <= 0) return 0.0;
  auto pos = std::lower_bound(
      a.counts.begin(), a.counts.end(), entity,
      [](const auto& pair, std::string_view key) { return pair.first < key; });
  if (pos == a.counts.end() || pos->first != entity) return 0.0;
  return static_cast<double>(pos->second) / static_cast<double>(a.total);
}

const std::vector<float>* KnowledgeSnapshot::embedding_of(std::string_view key) const {
  auto it = embeddings_.find(std::string(key));
  return it == embeddings_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

enum class StoreKind : std::uint8_t {
  kAliases = 0,
  kAnchors = 1,
  kNgrams = 2,
  kEmbeddings = 3,
};

void write_store_file(const std::filesystem::path& path, StoreKind kind,
                      std::uint64_t records, std::uint32_t dim,
                      const std::string& payload) {
  ByteWriter header;
  header.buf.append(kMagic, 4);
  header.put_u32(kFormatVersion);
  header.put_u8(static_cast<std::uint8_t>(kind));
  header.put_u64(records);
  header.put_u32(dim);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(header.buf.data(), static_cast<std::streamsize>(header.buf.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

struct StoreFile {
  std::uint64_t records;
  std::uint32_t dim;
  std::string payload;
};

StoreFile read_store_file(const std::filesystem::path& path, StoreKind expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string bytes = std::move(ss).str();

  ByteReader r{bytes, 0, path.string()};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw SnapshotError(path.string() + ": bad magic");
  r.pos = 4;
  std::uint32_t version = r.get_u32();
  if (version != kFormatVersion)
    throw SnapshotError(path.string() + ": unsupported format version " +
                        std::to_string(version));
  auto kind = static_cast<StoreKind>(r.get_u8());
  if (kind != expected_kind) throw SnapshotError(path.string() + ": wrong store kind");
  StoreFile f;
  f.records = r.get_u64();
  f.dim = r.get_u32();
  f.payload = std::string(bytes.substr(r.pos));
  return f;
}

void check_store(const std::filesystem::path& file, const StoreFile& f,
                 const StoreInfo& expect) {
  if (f.records != expect.records)
    throw SnapshotError(file.string() + ": record count mismatch vs manifest");
  if (to_hex(fnv1a64(f.payload)) != expect.checksum)
    throw SnapshotError(file.string() + ": checksum mismatch");
}

}  // namespace

void KnowledgeSnapshot::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_store_file(dir / "aliases.bin", StoreKind::kAliases, info_.aliases.records, 0,
                   serialize_aliases(aliases_));
  write_store_file(dir / "anchors.bin", StoreKind::kAnchors, info_.anchors.records, 0,
                   serialize_anchors(anchors_));
  write_store_file(dir / "ngrams.bin", StoreKind::kNgrams, info_.ngrams.records, 0,
                   serialize_ngrams(ngrams_));
  write_store_file(dir / "embeddings.bin", StoreKind::kEmbeddings,
                   info_.embeddings.records, info_.embedding_dim,
                   serialize_embeddings(embeddings_));

  nlohmann::json manifest = {
      {"format", kFormatVersion},
      {"embedding_dim", info_.embedding_dim},
      {"stores",
       {{"aliases", {{"file", "aliases.bin"}, {"records", info_.aliases.records}, {"checksum", info_.aliases.checksum}}},
        {"anchors", {{"file", "anchors.bin"}, {"records", info_.anchors.records}, {"checksum", info_.anchors.checksum}}},
        {"ngrams", {{"file", "ngrams.bin"}, {"records", info_.ngrams.records}, {"checksum", info_.ngrams.checksum}}},
        {"embeddings",
         {{"file", "embeddings.bin"}, {"records", info_.embeddings.records}, {"checksum", info_.embeddings.checksum}}}}}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

KnowledgeSnapshot KnowledgeSnapshot::load(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw SnapshotError("no snapshot manifest at " + dir.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError("bad manifest at " + dir.string() + ": " + e.what());
  }

  KnowledgeSnapshot snap;
  try {
    snap.info_.embedding_dim = manifest.at("embedding_dim").get<std::uint32_t>();
    const auto& stores = manifest.at("stores");
    auto store_info = [&](const char* name) {
      const auto& s = stores.at(name);
      return StoreInfo{s.at("records").get<std::uint64_t>(),
                       s.at("checksum").get<std::string>()};
    };
    snap.info_.aliases = store_info("aliases");
    snap.info_.anchors = store_info("anchors");
    snap.info_.ngrams = store_info("ngrams");
    snap.info_.embeddings = store_info("embeddings");
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError("bad manifest at " + dir.string() + ": " + e.what());
  }

  {
    auto f = read_store_file(dir / "aliases.bin", StoreKind::kAliases);
    check_store(dir / "aliases.bin", f, snap.info_.aliases);
    ByteReader r{f.payload, 0, (dir / "aliases.bin").string()};
    for (std::uint64_t i = 0; i < f.records; ++i) {
      std::string surface = r.get_str();
      std::uint32_t n = r.get_u32();
      std::vector<AliasEntry> entries;
      entries.reserve(n);
      for (std::uint32_t j = 0; j < n; ++j) {
        auto source = static_cast<AliasSource>(r.get_u8());
        entries.push_back(AliasEntry{r.get_str(), source});
      }
      snap.aliases_.emplace(std::move(surface), std::move(entries));
    }
    if (!r.done()) throw SnapshotError("trailing bytes in aliases.bin");
  }
  {
    auto f = read_store_file(dir / "anchors.bin", StoreKind::kAnchors);
    check_store(dir / "anchors.bin", f, snap.info_.anchors);
    ByteReader r{f.payload, 0, (dir / "anchors.bin").string()};
    for (std::uint64_t i = 0; i < f.records; ++i) {
      std::string anchor = r.get_str();
      std::uint32_t n = r.get_u32();
      Anchor a;
      a.counts.reserve(n);
      for (std::uint32_t j = 0; j < n; ++j) {
        std::string entity = r.get_str();
        std::int64_t count = r.get_i64();
        a.total += count;
        a.counts.emplace_back(std::move(entity), count);
      }
      snap.anchors_.emplace(std::move(anchor), std::move(a));
    }
    if (!r.done()) throw SnapshotError("trailing bytes in anchors.bin");
  }
  {
    auto f = read_store_file(dir / "ngrams.bin", StoreKind::kNgrams);
    check_store(dir / "ngrams.bin", f, snap.info_.ngrams);
    ByteReader r{f.payload, 0, (dir / "ngrams.bin").string()};
    for (std::uint64_t i = 0; i < f.records; ++i) {
      std::string ngram = r.get_str();
      snap.ngrams_.emplace(std::move(ngram), r.get_i64());
    }
    if (!r.done()) throw SnapshotError("trailing bytes in ngrams.bin");
  }
  {
    auto f = read_store_file(dir / "embeddings.bin", StoreKind::kEmbeddings);
    check_store(dir / "embeddings.bin", f, snap.info_.embeddings);
    if (f.records > 0 && f.dim != snap.info_.embedding_dim)
      throw SnapshotError("embedding dimension mismatch vs manifest");
    ByteReader r{f.payload, 0, (dir / "embeddings.bin").string()};
    for (std::uint64_t i = 0; i < f.records; ++i) {
      std::string key = r.get_str();
      std::vector<float> vec(f.dim);
      for (std::uint32_t j = 0; j < f.dim; ++j) vec[j] = r.get_f32();
      snap.embeddings_.emplace(std::move(key), std::move(vec));
    }
    if (!r.done()) throw SnapshotError("trailing bytes in embeddings.bin");
  }

  snap.build_derived();
  return snap;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

// Reads lines, stripping a trailing '\r'. Returns false at EOF.
bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++lineno;
  return true;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

std::int64_t parse_int64(std::string_view s, const std::string& what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("ingest", "invalid " + what + " '" + std::string(s) + "'");
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

KnowledgeSnapshot ingest_snapshot(const std::filesystem::path& aliases_tsv,
                                  const std::filesystem::path& anchors_tsv,
                                  const std::filesystem::path& ngrams_tsv,
                                  const std::filesystem::path& embeddings_txt,
                                  const std::filesystem::path& out_dir) {
  SnapshotBuilder builder;

  {
    auto in = open_input(aliases_tsv);
    std::string line;
    std::size_t lineno = 0;
    while (next_line(in, line, lineno)) {
      if (line.empty()) continue;
      try {
        auto fields = split_tabs(line);
        if (fields.size() != 3)
          throw Error("ingest", "expected 3 tab-separated fields, got " +
                                    std::to_string(fields.size()));
        auto source = alias_source_from_name(fields[2]);
        if (!source)
          throw Error("ingest", "unknown alias source '" + std::string(fields[2]) + "'");
        builder.add_alias(fields[0], fields[1], *source);
      } catch (const Error& e) {
        throw ParseError(aliases_tsv.string(), lineno, e.what());
      }
    }
  }
  {
    auto in = open_input(anchors_tsv);
    std::string line;
    std::size_t lineno = 0;
    while (next_line(in, line, lineno)) {
      if (line.empty()) continue;
      try {
        auto fields = split_tabs(line);
        if (fields.size() != 3)
          throw Error("ingest", "expected 3 tab-separated fields, got " +
                                    std::to_string(fields.size()));
        builder.add_anchor(fields[0], fields[1], parse_int64(fields[2], "anchor count"));
      } catch (const Error& e) {
        throw ParseError(anchors_tsv.string(), lineno, e.what());
      }
    }
  }
  {
    auto in = open_input(ngrams_tsv);
    std::string line;
    std::size_t lineno = 0;
    while (next_line(in, line, lineno)) {
      if (line.empty()) continue;
      try {
        auto fields = split_tabs(line);
        if (fields.size() != 2)
          throw Error("ingest", "expected 2 tab-separated fields, got " +
                                    std::to_string(fields.size()));
        builder.add_ngram(fields[0], parse_int64(fields[1], "n-gram frequency"));
      } catch (const Error& e) {
        throw ParseError(ngrams_tsv.string(), lineno, e.what());
      }
    }
  }
  {
    auto in = open_input(embeddings_txt);
    std::string line;
    std::size_t lineno = 0;
    if (!next_line(in, line, lineno))
      throw ParseError(embeddings_txt.string(), 1, "missing 'N D' header");
    std::uint64_t expected = 0;
    std::uint32_t dim = 0;
    {
      std::istringstream hs(line);
      if (!(hs >> expected >> dim) || dim == 0)
        throw ParseError(embeddings_txt.string(), lineno, "bad 'N D' header");
    }
    std::uint64_t count = 0;
    while (next_line(in, line, lineno)) {
      if (line.empty()) continue;
      try {
        auto fields = split_tabs(line);
        if (fields.size() != 2)
          throw Error("ingest", "expected 'key<TAB>values'");
        std::vector<float> vec;
        vec.reserve(dim);
        std::string_view values = fields[1];
        std::size_t pos = 0;
        while (pos < values.size()) {
          while (pos < values.size() && values[pos] == ' ') ++pos;
          if (pos >= values.size()) break;
          std::size_t end = values.find(' ', pos);
          if (end == std::string_view::npos) end = values.size();
          float v = 0.0f;
          auto sv = values.substr(pos, end - pos);
          auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
          if (ec != std::errc() || ptr != sv.data() + sv.size())
            throw Error("ingest", "invalid float '" + std::string(sv) + "'");
          vec.push_back(v);
          pos = end;
        }
        if (vec.size() != dim)
          throw Error("ingest", "embedding dimension mismatch: header says " +
                                    std::to_string(dim) + ", row has " +
                                    std::to_string(vec.size()));
        builder.add_embedding(fields[0], std::move(vec));
        ++count;
      } catch (const Error& e) {
        throw ParseError(embeddings_txt.string(), lineno, e.what());
      }
    }
    if (count != expected)
      throw ParseError(embeddings_txt.string(), lineno,
                       "header announced " + std::to_string(expected) + " records, found " +
                           std::to_string(count));
  }

  KnowledgeSnapshot snap = builder.build();
  snap.save(out_dir);
  return snap;
}

}  // namespace qinterp
