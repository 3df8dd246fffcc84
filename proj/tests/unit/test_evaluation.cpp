#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "qinterp/errors.hpp"
#include "qinterp/evaluation.hpp"
#include "qinterp/serialize.hpp"
#include "qinterp/text.hpp"

using namespace qinterp;
using namespace qinterp::testsupport;

TEST_SUITE_BEGIN("evaluation");

namespace {

Part lp(std::string text, std::string entity) {
  return Part{std::move(text), EntityId(std::move(entity))};
}
Part up(std::string text) { return Part{std::move(text), std::nullopt}; }

}  // namespace

TEST_CASE("entity metrics cover the empty-set corners exactly") {
  auto m = entity_metrics({}, {});
  CHECK(m.prec == 1.0);
  CHECK(m.rec == 1.0);
  CHECK(m.rec_star == 1.0);

  m = entity_metrics({}, {{"A", 2}});
  CHECK(m.prec == 0.0);
  CHECK(m.rec == 0.0);
  CHECK(m.rec_star == 0.0);

  m = entity_metrics({"A"}, {});
  CHECK(m.prec == 0.0);
  CHECK(m.rec == 0.0);
  CHECK(m.rec_star == 0.0);
}

TEST_CASE("entity metrics weigh by relevance") {
  auto m = entity_metrics({"A", "B", "C"}, {{"A", 2}, {"D", 1}});
  CHECK(m.prec == doctest::Approx(1.0 / 3.0));
  CHECK(m.rec == doctest::Approx(0.5));
  CHECK(m.rec_star == doctest::Approx(2.0 / 3.0));

  // Perfect prediction.
  m = entity_metrics({"A", "D"}, {{"A", 2}, {"D", 1}});
  CHECK(m.prec == 1.0);
  CHECK(m.rec == 1.0);
  CHECK(m.rec_star == 1.0);
}

TEST_CASE("micro pooling differs from macro averaging") {
  // Query 1: one of two gold entities found; query 2: the one gold entity
  // missed. Macro recall (0.5 + 0) / 2 = 0.25, micro recall 1/3.
  std::vector<EntityJudgment> queries = {
      {{"A"}, {{"A", 1}, {"B", 1}}},
      {{"X"}, {{"C", 1}}},
  };
  auto result = aggregate_entity_metrics(queries);
  REQUIRE(result.per_query.size() == 2);
  CHECK(result.macro.rec == doctest::Approx(0.25));
  CHECK(result.micro.rec == doctest::Approx(1.0 / 3.0));
  CHECK(result.macro.prec == doctest::Approx(0.5));
  CHECK(result.micro.prec == doctest::Approx(0.5));
  CHECK(result.micro.rec_star == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("pooled zero denominators follow the emptiness conventions") {
  std::vector<EntityJudgment> all_empty = {{{}, {}}, {{}, {}}};
  auto result = aggregate_entity_metrics(all_empty);
  CHECK(result.micro.prec == 1.0);
  CHECK(result.micro.rec == 1.0);
  CHECK(result.micro.rec_star == 1.0);
  CHECK(result.macro.prec == 1.0);

  std::vector<EntityJudgment> empty_gold = {{{"A"}, {}}};
  result = aggregate_entity_metrics(empty_gold);
  CHECK(result.micro.rec == 0.0);
  CHECK(result.micro.prec == 0.0);

  CHECK_THROWS_AS((void)aggregate_entity_metrics({}), SchemaError);
}

TEST_CASE("per-query entity metrics agree with the reference formulas") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 200; ++round) {
    std::set<EntityId> pred;
    std::map<EntityId, int> gold;
    for (int i = 0; i < 6; ++i) {
      std::string e = "E" + std::to_string(rng() % 8);
      if (rng() % 2) pred.insert(e);
      if (rng() % 2) gold[e] = 1 + int(rng() % 2);
    }
    auto got = entity_metrics(pred, gold);
    double p, r, rs;
    oracle_entity_metrics(pred, gold, p, r, rs);
    CHECK(got.prec == doctest::Approx(p).epsilon(1e-12));
    CHECK(got.rec == doctest::Approx(r).epsilon(1e-12));
    CHECK(got.rec_star == doctest::Approx(rs).epsilon(1e-12));
  }
}

TEST_CASE("uniform relevance makes weighted recall equal plain recall") {
  std::mt19937_64 rng(123);
  for (int round = 0; round < 500; ++round) {
    std::set<EntityId> pred;
    std::map<EntityId, int> gold;
    for (int i = 0; i < 5; ++i) {
      std::string e = "E" + std::to_string(rng() % 6);
      if (rng() % 2) pred.insert(e);
      if (rng() % 3) gold[e] = 2;  // all gold entities share one relevance
    }
    auto m = entity_metrics(pred, gold);
    CHECK(m.rec_star == doctest::Approx(m.rec).epsilon(1e-12));
  }
}

TEST_CASE("interpretation matching distinguishes complete, partial, none") {
  std::vector<Part> gold = {lp("new york times", "The_New_York_Times"),
                            up("square"), up("dance")};
  std::vector<Part> same = gold;
  CHECK(match_interpretation(same, gold) == MatchGrade::kComplete);

  // Same entity links, different segment boundaries: partial.
  std::vector<Part> coarser = {lp("new york times", "The_New_York_Times"),
                               up("square dance")};
  CHECK(match_interpretation(coarser, gold) == MatchGrade::kPartial);

  // Different links: no match at all.
  std::vector<Part> other = {lp("new york times", "The_New_York_Times"),
                             lp("square dance", "Square_Dance")};
  CHECK(match_interpretation(other, gold) == MatchGrade::kNone);
  CHECK(match_interpretation({}, gold) == MatchGrade::kNone);

  // Both unlinked with equal boundaries: complete; different boundaries:
  // still partial because the (empty) link multisets agree.
  std::vector<Part> u1 = {up("a"), up("b c")};
  std::vector<Part> u2 = {up("a b"), up("c")};
  CHECK(match_interpretation(u1, u1) == MatchGrade::kComplete);
  CHECK(match_interpretation(u1, u2) == MatchGrade::kPartial);

  // Links compare as a multiset: a repeated entity must repeat on both
  // sides, but the boundaries may differ.
  std::vector<Part> twice_a = {lp("x", "E1"), lp("y", "E1")};
  std::vector<Part> twice_b = {lp("x y", "E1"), lp("z", "E1")};
  CHECK(match_interpretation(twice_a, twice_b) == MatchGrade::kPartial);
  std::vector<Part> thrice = {lp("x y", "E1")};
  CHECK(match_interpretation(twice_a, thrice) == MatchGrade::kNone);
  std::vector<Part> once = {lp("x", "E1"), up("y")};
  CHECK(match_interpretation(once, twice_a) == MatchGrade::kNone);
}

TEST_CASE("run files round-trip through save and load") {
  std::vector<RunRecord> run = {
      {"q01",
       {{{lp("apollo 11", "Apollo_11"), up("mission duration")}, 1.75},
        {{up("apollo 11 mission duration")}, 0.0}},
       12.5},
      {"q02", {}, std::nullopt},
  };
  auto path = fresh_scratch("runfile") / "run.jsonl";
  save_run(path, run);
  auto loaded = load_run(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].query_id == "q01");
  REQUIRE(loaded[0].interpretations.size() == 2);
  CHECK(loaded[0].interpretations[0].parts ==
        run[0].interpretations[0].parts);
  CHECK(loaded[0].interpretations[0].score == doctest::Approx(1.75));
  REQUIRE(loaded[0].latency_ms.has_value());
  CHECK(*loaded[0].latency_ms == doctest::Approx(12.5));
  CHECK_FALSE(loaded[1].latency_ms.has_value());
  CHECK(loaded[1].interpretations.empty());

  auto bad = fresh_scratch("badrun") / "run.jsonl";
  std::ofstream(bad) << "{not json\n";
  CHECK_THROWS_AS((void)load_run(bad), ParseError);
  // A record without an id cannot be named, so it reports by file line.
  std::ofstream(bad) << R"({"interpretations": []})" << "\n";
  CHECK_THROWS_AS((void)load_run(bad), ParseError);
  // Field-level violations on an identified record report by query id.
  std::ofstream(bad) << R"({"query_id": "q9", "interpretations": 3})" << "\n";
  CHECK_THROWS_AS((void)load_run(bad), SchemaError);
}

TEST_CASE("interpretation metrics on a hand-checked single query") {
  GroundTruthRecord rec;
  rec.id = "q";
  rec.query = "a b c";
  rec.cluster = "c";
  rec.interpretations = {
      {{lp("a", "E1"), up("b c")}, 3, 1},
      {{lp("a", "E1"), up("b"), up("c")}, 2, 1},  // same class, coarser grade
      {{lp("a", "E2"), up("b c")}, 2, 2},
  };
  std::vector<GroundTruthRecord> corpus = {rec};

  SUBCASE("a complete hit on one class") {
    std::vector<RunRecord> run = {
        {"q", {{{lp("a", "E1"), up("b c")}, 1.0}}, std::nullopt}};
    auto m = interpretation_metrics(run, corpus, 2, 0);
    CHECK(m.queries == 1);
    // Two gold classes (grades 3 and 2). The single prediction completely
    // matches class 1 and misses class 2.
    CHECK(m.complete.r == doctest::Approx(0.5));
    CHECK(m.complete.r_star == doctest::Approx(3.0 / 5.0));
    CHECK(m.complete.p == doctest::Approx(1.0));
    CHECK(m.complete.f1 == doctest::Approx(2 * 0.5 / 1.5));
    CHECK(m.partial.r == doctest::Approx(0.5));
    CHECK(m.partial.p == doctest::Approx(1.0));
    CHECK_FALSE(m.mean_latency_ms.has_value());
  }

  SUBCASE("a partial hit counts only on the partial side") {
    std::vector<RunRecord> run = {
        {"q", {{{lp("a b", "E1"), up("c")}, 1.0}}, 4.0}};
    auto m = interpretation_metrics(run, corpus, 2, 0);
    CHECK(m.partial.r == doctest::Approx(0.5));
    CHECK(m.partial.p == doctest::Approx(1.0));
    CHECK(m.complete.r == doctest::Approx(0.0));
    CHECK(m.complete.p == doctest::Approx(0.0));
    CHECK(m.complete.f1 == doctest::Approx(0.0));
    REQUIRE(m.mean_latency_ms.has_value());
    CHECK(*m.mean_latency_ms == doctest::Approx(4.0));
  }

  SUBCASE("top_k cuts off low-scoring predictions") {
    std::vector<RunRecord> run = {
        {"q",
         {{{up("a b c")}, 9.0},  // ranked first, matches nothing
          {{lp("a", "E1"), up("b c")}, 1.0}},
         std::nullopt}};
    auto all = interpretation_metrics(run, corpus, 2, 0);
    CHECK(all.complete.r == doctest::Approx(0.5));
    CHECK(all.complete.p == doctest::Approx(0.5));
    auto top1 = interpretation_metrics(run, corpus, 2, 1);
    CHECK(top1.complete.r == doctest::Approx(0.0));
    CHECK(top1.complete.p == doctest::Approx(0.0));
    CHECK(top1.partial.r == doctest::Approx(0.0));
  }

  SUBCASE("min_grade widens or narrows the gold pool") {
    // With min_grade 3 only class 1 (grade 3 member) remains.
    std::vector<RunRecord> run = {
        {"q", {{{lp("a", "E2"), up("b c")}, 1.0}}, std::nullopt}};
    auto strict = interpretation_metrics(run, corpus, 3, 0);
    CHECK(strict.partial.r == doctest::Approx(0.0));
    auto lax = interpretation_metrics(run, corpus, 2, 0);
    CHECK(lax.partial.r == doctest::Approx(0.5));  // class 2 matched
    CHECK(lax.partial.r_star == doctest::Approx(2.0 / 5.0));
  }

  SUBCASE("empty prediction lists follow the emptiness conventions") {
    std::vector<RunRecord> run = {{"q", {}, std::nullopt}};
    auto m = interpretation_metrics(run, corpus, 2, 0);
    CHECK(m.partial.r == 0.0);
    CHECK(m.partial.p == 0.0);  // gold classes exist but nothing was said
    auto none_gold = interpretation_metrics(run, corpus, 9, 0);
    CHECK(none_gold.partial.r == 1.0);  // nothing to find, nothing claimed
    CHECK(none_gold.partial.p == 1.0);
    CHECK(none_gold.partial.f1 == 1.0);
  }

  SUBCASE("unknown run ids are rejected") {
    std::vector<RunRecord> run = {{"mystery", {}, std::nullopt}};
    CHECK_THROWS_AS((void)interpretation_metrics(run, corpus, 2, 0), SchemaError);
  }
}

TEST_CASE("matching any member of an equivalence class counts the class once") {
  GroundTruthRecord rec;
  rec.id = "q";
  rec.query = "a b";
  rec.cluster = "c";
  rec.interpretations = {
      {{lp("a", "E1"), up("b")}, 3, 7},
      {{lp("a b", "E1")}, 2, 7},  // same class
  };
  std::vector<RunRecord> run = {
      {"q",
       {{{lp("a", "E1"), up("b")}, 2.0}, {{lp("a b", "E1")}, 1.0}},
       std::nullopt}};
  auto m = interpretation_metrics(run, {rec}, 2, 0);
  // One class, matched completely by both predictions.
  CHECK(m.complete.r == doctest::Approx(1.0));
  CHECK(m.complete.r_star == doctest::Approx(1.0));
  CHECK(m.complete.p == doctest::Approx(1.0));
}

TEST_CASE("pipeline metrics over the mini corpus match the reference scorer") {
  const auto& snap = mini_snapshot();
  auto corpus = load_corpus(mini_corpus_path());
  EngineConfig cfg;

  std::vector<RunRecord> run;
  for (const auto& rec : corpus)
    run.push_back(to_run_record(rec.id, interpret(snap, rec.query, cfg)));

  for (int min_grade : {1, 2, 3}) {
    for (int top_k : {0, 1, 3}) {
      CAPTURE(min_grade);
      CAPTURE(top_k);
      auto got = interpretation_metrics(run, corpus, min_grade, top_k);
      auto want = oracle_interpretation_metrics(run, corpus, min_grade, top_k);
      CHECK(got.partial.r == doctest::Approx(want.pr).epsilon(1e-9));
      CHECK(got.partial.r_star == doctest::Approx(want.pr_star).epsilon(1e-9));
      CHECK(got.partial.p == doctest::Approx(want.pp).epsilon(1e-9));
      CHECK(got.partial.f1 == doctest::Approx(want.pf1).epsilon(1e-9));
      CHECK(got.complete.r == doctest::Approx(want.cr).epsilon(1e-9));
      CHECK(got.complete.r_star == doctest::Approx(want.cr_star).epsilon(1e-9));
      CHECK(got.complete.p == doctest::Approx(want.cp).epsilon(1e-9));
      CHECK(got.complete.f1 == doctest::Approx(want.cf1).epsilon(1e-9));
      // Complete never exceeds partial.
      CHECK(got.complete.r <= got.partial.r + 1e-12);
      CHECK(got.complete.p <= got.partial.p + 1e-12);
    }
  }
  // The pipeline does find things: the partial top-recall is positive.
  auto sanity = interpretation_metrics(run, corpus, 2, 0);
  CHECK(sanity.partial.r > 0.4);
  CHECK(sanity.complete.r > 0.3);
  REQUIRE(sanity.mean_latency_ms.has_value());
  CHECK(*sanity.mean_latency_ms > 0.0);
  CHECK(sanity.queries == 25);
}

TEST_CASE("complete metrics never exceed partial metrics on random runs") {
  auto corpus = load_corpus(mini_corpus_path());
  std::mt19937_64 rng(2024);
  const char* entities[] = {"Apollo_11", "Moon", "New_York_City", "Times_Square",
                            "Square_Dance", "Paris", "U2", "Windows_XP"};
  for (int round = 0; round < 50; ++round) {
    std::vector<RunRecord> run;
    for (const auto& rec : corpus) {
      RunRecord r;
      r.query_id = rec.id;
      int preds = int(rng() % 4);
      auto terms = split_terms(normalize(rec.query));
      for (int i = 0; i < preds; ++i) {
        RunInterpretation ri;
        ri.score = double(rng() % 100) / 10.0;
        // Random boundaries, random links: sometimes borrows a gold
        // interpretation to guarantee occasional matches.
        if (rng() % 3 == 0) {
          const auto& gi = rec.interpretations[rng() % rec.interpretations.size()];
          ri.parts = gi.parts;
        } else {
          std::size_t start = 0;
          while (start < terms.size()) {
            std::size_t len = 1 + rng() % (terms.size() - start);
            std::string text = terms[start];
            for (std::size_t t = start + 1; t < start + len; ++t)
              text += " " + terms[t];
            Part p{text, std::nullopt};
            if (rng() % 2) p.entity = entities[rng() % 8];
            ri.parts.push_back(std::move(p));
            start += len;
          }
        }
        r.interpretations.push_back(std::move(ri));
      }
      run.push_back(std::move(r));
    }
    auto m = interpretation_metrics(run, corpus, 2, 0);
    CHECK(m.complete.r <= m.partial.r + 1e-12);
    CHECK(m.complete.r_star <= m.partial.r_star + 1e-12);
    CHECK(m.complete.p <= m.partial.p + 1e-12);
  }
}

TEST_CASE("the commonness baseline links the showcase query plausibly") {
  const auto& snap = showcase_snapshot();
  EngineConfig cfg;
  auto interp = baseline_top1(snap, tokenize("new york times square dance"), cfg);
  CHECK(interp.canonical() ==
        "new york times->The_New_York_Times | square dance->Square_Dance");
  CHECK(interp.score > 0.0);
  REQUIRE(interp.components.size() == 2);

  // On a query with no candidates the baseline stays unlinked.
  auto blank = baseline_top1(snap, tokenize("zzz yyy"), cfg);
  CHECK(blank.linked_count() == 0);
  CHECK(blank.score == 0.0);
}

TEST_SUITE_END();
