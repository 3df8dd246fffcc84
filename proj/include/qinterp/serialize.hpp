#ifndef QINTERP_SERIALIZE_HPP
#define QINTERP_SERIALIZE_HPP

#include <string>

#include <json.hpp>

#include "qinterp/corpus.hpp"
#include "qinterp/evaluation.hpp"
#include "qinterp/interpreter.hpp"

namespace qinterp {

// The one serializer for interpretation payloads: command-line output and
// the HTTP service both go through it, so the bytes match.
nlohmann::json to_json(const Interpretation& interp);
nlohmann::json to_json(const PhaseTimings& timings);

// The interpretation reduced to evaluation parts ({text, entity}).
std::vector<Part> to_parts(const Interpretation& interp);

// Engine output packaged as a run-file record.
RunRecord to_run_record(std::string query_id, const InterpretResult& result);

}  // namespace qinterp

#endif  // QINTERP_SERIALIZE_HPP
