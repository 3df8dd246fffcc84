#include "qinterp/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include "qinterp/errors.hpp"
#include "qinterp/interpreter.hpp"
#include "qinterp/serialize.hpp"

namespace qinterp {

using nlohmann::json;

std::string interpret_response_body(const KnowledgeSnapshot& snapshot,
                                    const std::string& query,
                                    const EngineConfig& config) {
  InterpretResult result = interpret(snapshot, query, config);
  json interps = json::array();
  for (const Interpretation& interp : result.interpretations)
    interps.push_back(to_json(interp));
  json body = {{"query", query},
               {"interpretations", std::move(interps)},
               {"timings", to_json(result.timings)}};
  return body.dump();
}

namespace {

void fail(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

void register_routes(httplib::Server& server, const KnowledgeSnapshot& snapshot,
                     const EngineConfig& config) {
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });

  server.Get("/interpret", [&snapshot, &config](const httplib::Request& req,
                                                httplib::Response& res) {
    if (!req.has_param("q")) {
      fail(res, 400, "missing query parameter q");
      return;
    }
    std::string query = req.get_param_value("q");
    if (query.empty()) {
      fail(res, 400, "empty query");
      return;
    }
    if (query.size() > kMaxQueryBytes) {
      fail(res, 400, "query exceeds " + std::to_string(kMaxQueryBytes) + " bytes");
      return;
    }
    try {
      res.set_content(interpret_response_body(snapshot, query, config),
                      "application/json");
    } catch (const QueryError& e) {
      fail(res, 400, e.what());
    } catch (const Error& e) {
      fail(res, 500, e.what());
    }
  });
}

}  // namespace qinterp
