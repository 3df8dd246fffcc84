#include "qinterp/serialize.hpp"

namespace qinterp {

using nlohmann::json;

json to_json(const Interpretation& interp) {
  json parts = json::array();
  for (const LinkedSegment& p : interp.parts) {
    parts.push_back(json{{"text", p.segment.text},
                         {"entity", p.link ? json(*p.link) : json(nullptr)}});
  }
  json links = json::array();
  json components = json::array();
  for (const EntityScore& es : interp.components) {
    links.push_back(es.entity);
    components.push_back(json{{"entity", es.entity},
                              {"cmn", es.cmn},
                              {"rel", es.rel},
                              {"cxt", es.cxt}});
  }
  return json{{"segmentation", interp.canonical()},
              {"parts", std::move(parts)},
              {"links", std::move(links)},
              {"score", interp.score},
              {"components", std::move(components)}};
}

json to_json(const PhaseTimings& timings) {
  return json{{"segmentation_ms", timings.segmentation_ms},
              {"linking_ms", timings.linking_ms},
              {"combination_ms", timings.combination_ms},
              {"total_ms", timings.total_ms}};
}

std::vector<Part> to_parts(const Interpretation& interp) {
  std::vector<Part> out;
  out.reserve(interp.parts.size());
  for (const LinkedSegment& p : interp.parts)
    out.push_back(Part{p.segment.text, p.link});
  return out;
}

RunRecord to_run_record(std::string query_id, const InterpretResult& result) {
  RunRecord r;
  r.query_id = std::move(query_id);
  r.interpretations.reserve(result.interpretations.size());
  for (const Interpretation& interp : result.interpretations)
    r.interpretations.push_back(RunInterpretation{to_parts(interp), interp.score});
  r.latency_ms = result.timings.total_ms;
  return r;
}

}  // namespace qinterp
