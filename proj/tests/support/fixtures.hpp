#ifndef QINTERP_TESTS_SUPPORT_FIXTURES_HPP
#define QINTERP_TESTS_SUPPORT_FIXTURES_HPP

#include <unistd.h>

#include <filesystem>
#include <string>

#include "qinterp/kbstore.hpp"

namespace qinterp::testsupport {

inline std::filesystem::path fixture_dir() {
  return std::filesystem::path(QINTERP_FIXTURE_DIR);
}

// Scratch space for files the tests write; unique per process so parallel
// ctest invocations cannot collide.
inline std::filesystem::path scratch_dir() {
  static std::filesystem::path dir = [] {
    auto base = std::filesystem::temp_directory_path() /
                ("qinterp-tests-" + std::to_string(::getpid()));
    std::filesystem::create_directories(base);
    return base;
  }();
  return dir;
}

inline std::filesystem::path fresh_scratch(const std::string& name) {
  auto dir = scratch_dir() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline KnowledgeSnapshot ingest_fixture(const std::string& name) {
  auto src = fixture_dir() / name;
  return ingest_snapshot(src / "aliases.tsv", src / "anchors.tsv",
                         src / "ngrams.tsv", src / "embeddings.txt",
                         fresh_scratch("snap-" + name));
}

// Shared read-only snapshots, ingested once per test binary.
inline const KnowledgeSnapshot& showcase_snapshot() {
  static KnowledgeSnapshot snap = ingest_fixture("showcase");
  return snap;
}

inline const KnowledgeSnapshot& mini_snapshot() {
  static KnowledgeSnapshot snap = ingest_fixture("mini");
  return snap;
}

inline std::filesystem::path mini_corpus_path() {
  return fixture_dir() / "mini" / "corpus.jsonl";
}

}  // namespace qinterp::testsupport

#endif
