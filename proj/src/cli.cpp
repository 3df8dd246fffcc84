#include "qinterp/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "qinterp/config.hpp"
#include "qinterp/corpus.hpp"
#include "qinterp/errors.hpp"
#include "qinterp/evaluation.hpp"
#include "qinterp/interpreter.hpp"
#include "qinterp/kbstore.hpp"
#include "qinterp/linker.hpp"
#include "qinterp/segmentation.hpp"
#include "qinterp/serialize.hpp"
#include "qinterp/service.hpp"
#include "qinterp/text.hpp"

namespace qinterp {

namespace {

using nlohmann::json;

struct EngineFlags {
  std::string kb;
  EngineConfig config;

  void add_kb(CLI::App* cmd) {
    cmd->add_option("--kb", kb, "knowledge snapshot directory")
        ->envname("QINTERP_KB")
        ->required();
  }
  void add_scoring(CLI::App* cmd) {
    cmd->add_option("--alpha", config.weights.alpha, "commonness weight");
    cmd->add_option("--beta", config.weights.beta, "relatedness weight");
    cmd->add_option("--gamma", config.weights.gamma, "context weight");
  }

  void validate() const {
    if (!(config.threshold > 0.0 && config.threshold <= 1.0))
      throw CLI::ValidationError("--threshold", "must be in (0,1]");
    if (config.fuzzy_depth < 0)
      throw CLI::ValidationError("--depth", "must be >= 0");
    auto in01 = [](double w) { return w >= 0.0 && w <= 1.0; };
    if (!in01(config.weights.alpha) || !in01(config.weights.beta) ||
        !in01(config.weights.gamma))
      throw CLI::ValidationError("--alpha/--beta/--gamma", "must be in [0,1]");
    if (config.top_k < 0) throw CLI::ValidationError("--top-k", "must be >= 0");
  }

  KnowledgeSnapshot load() const { return KnowledgeSnapshot::load(kb); }
};

const char* action_name(FilterAction a) {
  switch (a) {
    case FilterAction::kRetained: return "retained";
    case FilterAction::kDroppedContained: return "dropped_contained";
    case FilterAction::kDroppedRatio: return "dropped_ratio";
    case FilterAction::kDroppedUnscorable: return "dropped_unscorable";
  }
  return "unknown";
}

std::vector<std::string> read_query_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> queries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) queries.push_back(line);
  }
  return queries;
}

// --- subcommand bodies -------------------------------------------------------

void cmd_ingest(std::ostream& out, const std::string& aliases,
                const std::string& anchors, const std::string& ngrams,
                const std::string& embeddings, const std::string& out_dir) {
  KnowledgeSnapshot snap =
      ingest_snapshot(aliases, anchors, ngrams, embeddings, out_dir);
  const BuildInfo& info = snap.build_info();
  out << json{{"out", out_dir},
              {"embedding_dim", info.embedding_dim},
              {"records",
               {{"aliases", info.aliases.records},
                {"anchors", info.anchors.records},
                {"ngrams", info.ngrams.records},
                {"embeddings", info.embeddings.records}}}}
             .dump()
      << '\n';
}

void cmd_segment(std::ostream& out, const EngineFlags& flags,
                 const std::string& raw_query, bool pretty) {
  KnowledgeSnapshot snap = flags.load();
  Query query = tokenize(raw_query);
  std::vector<Segmentation> ranked =
      rank_segmentations(snap, query, flags.config.max_query_terms);
  SkeletonSet skeletons = filter_skeletons(ranked, flags.config.threshold);

  if (pretty) {
    out << std::left << std::setw(5) << "rank" << std::setw(16) << "score"
        << std::setw(9) << "ratio" << std::setw(6) << "kept"
        << "segmentation\n";
  }
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const Segmentation& s = ranked[i];
    const FilterDecision& d = skeletons.decisions[i];
    bool kept = d.action == FilterAction::kRetained;
    if (pretty) {
      std::ostringstream ratio;
      if (d.ratio)
        ratio << std::fixed << std::setprecision(3) << *d.ratio;
      else
        ratio << "-";
      out << std::left << std::setw(5) << s.rank << std::setw(16)
          << std::setprecision(12) << s.score << std::setw(9) << ratio.str()
          << std::setw(6) << (kept ? "yes" : "no") << s.canonical() << '\n';
    } else {
      json j = {{"rank", s.rank},
                {"segmentation", s.canonical()},
                {"score", s.score},
                {"retained", kept},
                {"action", action_name(d.action)},
                {"ratio", d.ratio ? json(*d.ratio) : json(nullptr)}};
      out << j.dump() << '\n';
    }
  }
}

void cmd_link(std::ostream& out, const EngineFlags& flags,
              const std::string& raw_query, bool pretty) {
  KnowledgeSnapshot snap = flags.load();
  Query query = tokenize(raw_query);
  if (query.size() > flags.config.max_query_terms)
    throw QueryError("query has " + std::to_string(query.size()) +
                     " terms; limit is " +
                     std::to_string(flags.config.max_query_terms));
  CandidateSet candidates =
      candidate_entities(snap, query, flags.config.fuzzy_depth);
  for (const auto& [span, list] : candidates.spans) {
    if (pretty) {
      out << '[' << span.first << ',' << span.second << "] ";
      out << (list.empty() ? "(no candidates)" : "");
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) out << ", ";
        out << list[i].entity << '('
            << (list[i].match_kind == MatchKind::kExact ? "exact" : "fuzzy")
            << ' ' << std::fixed << std::setprecision(3)
            << list[i].lexical_score << ')';
      }
      out << '\n';
      continue;
    }
    json cands = json::array();
    for (const Candidate& c : list) {
      cands.push_back(
          {{"entity", c.entity},
           {"match", c.match_kind == MatchKind::kExact ? "exact" : "fuzzy"},
           {"lexical_score", c.lexical_score}});
    }
    std::string text =
        list.empty()
            ? join_terms(query.terms, static_cast<std::size_t>(span.first),
                         static_cast<std::size_t>(span.second))
            : list.front().segment.text;
    out << json{{"start", span.first},
                {"end", span.second},
                {"text", text},
                {"candidates", std::move(cands)}}
               .dump()
        << '\n';
  }
}

void cmd_interpret(std::ostream& out, const EngineFlags& flags,
                   const std::string& raw_query, bool pretty) {
  KnowledgeSnapshot snap = flags.load();
  InterpretResult result = interpret(snap, raw_query, flags.config);
  if (pretty) {
    out << std::left << std::setw(5) << "#" << std::setw(12) << "score"
        << "interpretation\n";
    for (std::size_t i = 0; i < result.interpretations.size(); ++i) {
      const Interpretation& interp = result.interpretations[i];
      out << std::left << std::setw(5) << i + 1 << std::setw(12)
          << std::setprecision(6) << interp.score << interp.canonical() << '\n';
    }
    out << "timings: segmentation " << result.timings.segmentation_ms
        << " ms, linking " << result.timings.linking_ms << " ms, combination "
        << result.timings.combination_ms << " ms, total "
        << result.timings.total_ms << " ms"
        << (result.truncated ? " (combinations truncated)" : "") << '\n';
    return;
  }
  for (const Interpretation& interp : result.interpretations)
    out << to_json(interp).dump() << '\n';
  out << json{{"timings", to_json(result.timings)},
              {"truncated", result.truncated}}
             .dump()
      << '\n';
}

void cmd_evaluate(std::ostream& out, const std::string& corpus_path,
                  const std::string& run_path, int min_grade, int top_k,
                  bool pretty) {
  if (min_grade < 1 || min_grade > 3)
    throw CLI::ValidationError("--min-grade", "must be in 1..3");
  if (top_k < 0) throw CLI::ValidationError("--top-k", "must be >= 0");
  std::vector<GroundTruthRecord> corpus = load_corpus(corpus_path);
  std::vector<RunRecord> run = load_run(run_path);
  InterpEvalResult interp = interpretation_metrics(run, corpus, min_grade, top_k);

  // Entity-level view: predictions = entities linked anywhere in a query's
  // returned interpretations; gold = annotated entities (max relevance on
  // duplicates).
  std::unordered_map<std::string, const GroundTruthRecord*> by_id;
  for (const auto& r : corpus) by_id.emplace(r.id, &r);
  std::vector<EntityJudgment> judgments;
  judgments.reserve(run.size());
  for (const RunRecord& rr : run) {
    EntityJudgment j;
    for (const RunInterpretation& ri : rr.interpretations)
      for (const Part& p : ri.parts)
        if (p.entity) j.predicted.insert(*p.entity);
    const GroundTruthRecord& gt = *by_id.at(rr.query_id);
    for (const GroundTruthEntity& e : gt.entities) {
      auto [it, inserted] = j.gold.emplace(e.entity, e.relevance);
      if (!inserted) it->second = std::max(it->second, e.relevance);
    }
    judgments.push_back(std::move(j));
  }
  EntityEvalResult entity = aggregate_entity_metrics(judgments);

  auto side = [](const InterpSideMetrics& m) {
    return json{{"r", m.r}, {"r_star", m.r_star}, {"p", m.p}, {"f1", m.f1}};
  };
  auto triple = [](const EntityTriple& t) {
    return json{{"prec", t.prec}, {"rec", t.rec}, {"rec_star", t.rec_star}};
  };
  json report = {
      {"queries", interp.queries},
      {"interpretation",
       {{"partial", side(interp.partial)},
        {"complete", side(interp.complete)},
        {"mean_latency_ms",
         interp.mean_latency_ms ? json(*interp.mean_latency_ms) : json(nullptr)}}},
      {"entity", {{"micro", triple(entity.micro)}, {"macro", triple(entity.macro)}}}};

  if (!pretty) {
    out << report.dump() << '\n';
    return;
  }
  auto row4 = [&](const char* name, double a, double b, double c, double d) {
    out << std::left << std::setw(10) << name << std::fixed
        << std::setprecision(3) << std::setw(8) << a << std::setw(8) << b
        << std::setw(8) << c << std::setw(8) << d << '\n';
  };
  out << "entity      prec    rec     rec*\n";
  out << std::left << std::setw(10) << "micro" << std::fixed
      << std::setprecision(3) << std::setw(8) << entity.micro.prec
      << std::setw(8) << entity.micro.rec << std::setw(8)
      << entity.micro.rec_star << '\n';
  out << std::left << std::setw(10) << "macro" << std::fixed
      << std::setprecision(3) << std::setw(8) << entity.macro.prec
      << std::setw(8) << entity.macro.rec << std::setw(8)
      << entity.macro.rec_star << '\n';
  out << "\ninterpretation  R       R*      P       F1\n";
  row4("partial", interp.partial.r, interp.partial.r_star, interp.partial.p,
       interp.partial.f1);
  row4("complete", interp.complete.r, interp.complete.r_star, interp.complete.p,
       interp.complete.f1);
  out << "\nqueries: " << interp.queries;
  if (interp.mean_latency_ms)
    out << "   mean latency: " << std::setprecision(2) << *interp.mean_latency_ms
        << " ms";
  out << '\n';
}

void cmd_split(std::ostream& out, std::ostream& err,
               const std::string& corpus_path, double ratio,
               double error_threshold, std::uint64_t seed,
               const std::string& out_dir) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw CLI::ValidationError("--ratio", "must be in (0,1)");
  if (error_threshold < 0.0)
    throw CLI::ValidationError("--error-threshold", "must be >= 0");
  std::vector<GroundTruthRecord> corpus = load_corpus(corpus_path);
  Split split = split_corpus(corpus, ratio, error_threshold, seed);

  std::filesystem::create_directories(out_dir);
  auto write_ids = [&](const char* name, const std::vector<std::string>& ids) {
    std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::trunc);
    if (!f) throw IoError(std::string("cannot write ") + name);
    for (const auto& id : ids) f << id << '\n';
  };
  write_ids("train.txt", split.train_ids);
  write_ids("test.txt", split.test_ids);

  json manifest = {{"seed", split.seed},
                   {"ratio", split.ratio},
                   {"error", split.error},
                   {"iterations", split.iterations},
                   {"reached_threshold", split.reached_threshold},
                   {"train_size", split.train_ids.size()},
                   {"test_size", split.test_ids.size()}};
  {
    std::ofstream f(std::filesystem::path(out_dir) / "split.json",
                    std::ios::trunc);
    if (!f) throw IoError("cannot write split.json");
    f << manifest.dump(2) << '\n';
  }
  out << manifest.dump() << '\n';
  if (!split.reached_threshold)
    err << "warning: error threshold not reached (best error "
        << split.error << ")\n";
}

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void handle_shutdown_signal(int) {
  if (httplib::Server* s = g_server.load()) s->stop();
}

void cmd_serve(std::ostream& err, const EngineFlags& flags,
               const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw CLI::ValidationError("--address", "expected host:port");
  std::string host = address.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--address", "invalid port");
  }
  if (port < 0 || port > 65535)
    throw CLI::ValidationError("--address", "invalid port");

  KnowledgeSnapshot snap = flags.load();
  httplib::Server server;
  register_routes(server, snap, flags.config);

  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) throw Error("serve", "cannot bind to " + host);
  } else if (!server.bind_to_port(host, port)) {
    throw Error("serve", "cannot bind to " + address);
  }

  g_server.store(&server);
  std::signal(SIGINT, handle_shutdown_signal);
  std::signal(SIGTERM, handle_shutdown_signal);
  err << "listening on http://" << host << ':' << bound << '\n';
  server.listen_after_bind();
  g_server.store(nullptr);
  err << "shut down\n";
}

void cmd_bench(std::ostream& out, const EngineFlags& flags,
               const std::string& queries_path, int repetitions) {
  if (repetitions < 1)
    throw CLI::ValidationError("--repetitions", "must be >= 1");
  std::vector<std::string> queries = read_query_file(queries_path);
  if (queries.empty()) throw Error("bench", "query file is empty");
  KnowledgeSnapshot snap = flags.load();

  for (const std::string& q : queries) interpret(snap, q, flags.config);  // warm-up

  std::vector<double> samples;
  samples.reserve(queries.size() * static_cast<std::size_t>(repetitions));
  std::vector<double> per_query(queries.size(), 0.0);
  for (int rep = 0; rep < repetitions; ++rep) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto t0 = std::chrono::steady_clock::now();
      interpret(snap, queries[i], flags.config);
      double ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      samples.push_back(ms);
      per_query[i] += ms;
    }
  }
  for (double& ms : per_query) ms /= repetitions;

  std::sort(samples.begin(), samples.end());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  auto pct = [&](double p) {
    std::size_t idx = static_cast<std::size_t>(
        p * static_cast<double>(samples.size() - 1) / 100.0);
    return samples[idx];
  };

  json per = json::array();
  for (std::size_t i = 0; i < queries.size(); ++i)
    per.push_back({{"query", queries[i]}, {"mean_ms", per_query[i]}});
  out << json{{"queries", queries.size()},
              {"repetitions", repetitions},
              {"mean_ms", mean},
              {"p50_ms", pct(50)},
              {"p95_ms", pct(95)},
              {"per_query", std::move(per)}}
             .dump()
      << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"query interpretation engine: segmentation, entity linking, "
               "and interpretation ranking over a knowledge snapshot"};
  app.name("qinterp");
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand(
      "ingest", "build a binary knowledge snapshot from TSV/text inputs");
  std::string in_aliases, in_anchors, in_ngrams, in_embeddings, in_out;
  ingest->add_option("--aliases", in_aliases, "alias TSV (surface, entity, source)")
      ->required();
  ingest->add_option("--anchors", in_anchors, "anchor TSV (anchor, entity, count)")
      ->required();
  ingest->add_option("--ngrams", in_ngrams, "n-gram TSV (ngram, frequency)")
      ->required();
  ingest
      ->add_option("--embeddings", in_embeddings,
                   "embeddings text file ('N D' header)")
      ->required();
  ingest->add_option("--out", in_out, "output snapshot directory")->required();
  ingest->callback(
      [&] { cmd_ingest(out, in_aliases, in_anchors, in_ngrams, in_embeddings, in_out); });

  // segment
  auto* segment = app.add_subcommand("segment", "rank and filter segmentations");
  EngineFlags seg_flags;
  std::string seg_query;
  bool seg_pretty = false;
  seg_flags.add_kb(segment);
  segment->add_option("--threshold", seg_flags.config.threshold,
                      "skeleton score-ratio cutoff");
  segment->add_flag("--pretty", seg_pretty, "human-readable table");
  segment->add_option("query", seg_query, "query text")->required();
  segment->callback([&] {
    seg_flags.validate();
    cmd_segment(out, seg_flags, seg_query, seg_pretty);
  });

  // link
  auto* link = app.add_subcommand("link", "list candidate entities per segment");
  EngineFlags link_flags;
  std::string link_query;
  bool link_pretty = false;
  link_flags.add_kb(link);
  link->add_option("--depth", link_flags.config.fuzzy_depth,
                   "fuzzy matches per segment (0 disables)");
  link->add_flag("--pretty", link_pretty, "human-readable listing");
  link->add_option("query", link_query, "query text")->required();
  link->callback([&] {
    link_flags.validate();
    cmd_link(out, link_flags, link_query, link_pretty);
  });

  // interpret
  auto* interp = app.add_subcommand("interpret", "rank query interpretations");
  EngineFlags int_flags;
  std::string int_query;
  bool int_pretty = false;
  int_flags.add_kb(interp);
  interp->add_option("--threshold", int_flags.config.threshold,
                     "skeleton score-ratio cutoff");
  interp->add_option("--depth", int_flags.config.fuzzy_depth,
                     "fuzzy matches per segment (0 disables)");
  int_flags.add_scoring(interp);
  interp->add_option("--top-k", int_flags.config.top_k,
                     "keep only the best k interpretations (0 = all)");
  interp->add_flag("--pretty", int_pretty, "human-readable table");
  interp->add_option("query", int_query, "query text")->required();
  interp->callback([&] {
    int_flags.validate();
    cmd_interpret(out, int_flags, int_query, int_pretty);
  });

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "score a run file against a corpus");
  std::string ev_corpus, ev_run;
  int ev_min_grade = 2, ev_top_k = 0;
  bool ev_pretty = false;
  evaluate->add_option("--corpus", ev_corpus, "ground-truth corpus (JSON lines)")
      ->required();
  evaluate->add_option("--run", ev_run, "system run file (JSON lines)")
      ->required();
  evaluate->add_option("--min-grade", ev_min_grade,
                       "ignore gold interpretations below this grade (1..3)");
  evaluate->add_option("--top-k", ev_top_k,
                       "evaluate only each query's k best predictions (0 = all)");
  evaluate->add_flag("--pretty", ev_pretty, "human-readable tables");
  evaluate->callback(
      [&] { cmd_evaluate(out, ev_corpus, ev_run, ev_min_grade, ev_top_k, ev_pretty); });

  // split
  auto* split = app.add_subcommand(
      "split", "cluster-respecting train/test split of a corpus");
  std::string sp_corpus, sp_out = ".";
  double sp_ratio = 0.8, sp_threshold = 0.05;
  std::uint64_t sp_seed = 1;
  split->add_option("--corpus", sp_corpus, "corpus to split (JSON lines)")
      ->required();
  split->add_option("--ratio", sp_ratio, "train share target");
  split->add_option("--error-threshold", sp_threshold,
                    "stop once the distribution error is this small");
  split->add_option("--seed", sp_seed, "random seed");
  split->add_option("--out", sp_out, "directory for train.txt/test.txt/split.json");
  split->callback(
      [&] { cmd_split(out, err, sp_corpus, sp_ratio, sp_threshold, sp_seed, sp_out); });

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP query interpretation service");
  EngineFlags srv_flags;
  std::string srv_address = "127.0.0.1:8080";
  srv_flags.add_kb(serve);
  serve->add_option("--threshold", srv_flags.config.threshold,
                    "skeleton score-ratio cutoff");
  serve->add_option("--depth", srv_flags.config.fuzzy_depth,
                    "fuzzy matches per segment (0 disables)");
  srv_flags.add_scoring(serve);
  serve->add_option("--top-k", srv_flags.config.top_k,
                    "keep only the best k interpretations (0 = all)");
  serve->add_option("--address", srv_address, "host:port (port 0 = any free)");
  serve->callback([&] {
    srv_flags.validate();
    cmd_serve(err, srv_flags, srv_address);
  });

  // bench
  auto* bench = app.add_subcommand("bench", "interpretation latency benchmark");
  EngineFlags bn_flags;
  std::string bn_queries;
  int bn_reps = 3;
  bn_flags.add_kb(bench);
  bench->add_option("--queries", bn_queries, "file with one query per line")
      ->required();
  bench->add_option("--repetitions", bn_reps, "timed passes over the file");
  bench->add_option("--threshold", bn_flags.config.threshold,
                    "skeleton score-ratio cutoff");
  bench->add_option("--depth", bn_flags.config.fuzzy_depth,
                    "fuzzy matches per segment (0 disables)");
  bn_flags.add_scoring(bench);
  bench->callback([&] {
    bn_flags.validate();
    cmd_bench(out, bn_flags, bn_queries, bn_reps);
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      auto subs = app.get_subcommands();
      out << (subs.empty() ? app.help() : subs.front()->help());
      return 0;
    }
    err << e.what() << "\n\n";
    auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  } catch (const Error& e) {
    err << "error (" << e.category() << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace qinterp
