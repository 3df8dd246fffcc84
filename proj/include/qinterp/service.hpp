#ifndef QINTERP_SERVICE_HPP
#define QINTERP_SERVICE_HPP

#include <cstddef>
#include <string>

#include "qinterp/config.hpp"
#include "qinterp/kbstore.hpp"

namespace httplib {
class Server;
}

namespace qinterp {

// Queries longer than this are rejected by the service with a 400.
inline constexpr std::size_t kMaxQueryBytes = 4096;

// Exact response body of GET /interpret?q=<query>:
// {"interpretations": [...], "query": "...", "timings": {...}}.
std::string interpret_response_body(const KnowledgeSnapshot& snapshot,
                                    const std::string& query,
                                    const EngineConfig& config);

// Installs GET /interpret and GET /health. The snapshot and config must
// outlive the server; both are shared read-only across request threads.
void register_routes(httplib::Server& server, const KnowledgeSnapshot& snapshot,
                     const EngineConfig& config);

}  // namespace qinterp

#endif  // QINTERP_SERVICE_HPP
