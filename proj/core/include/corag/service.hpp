#pragma once

#include <memory>
#include <string>
#include <thread>

#include "corag/suffix_index.hpp"

namespace httplib {
class Server;
}

namespace corag {

// Read-only query service over a loaded index:
//   POST /count {"query": s}          -> {"count": n}
//   POST /cooc  {"head": s, "tail": s} -> {"count": n}
//   GET  /health                       -> {"status": "ok", "tokens": n}
// Phrases longer than 64 tokens and malformed bodies get a 400.
class QueryService {
 public:
  explicit QueryService(const CorpusIndex& index);
  ~QueryService();

  // Blocks until stop() is called from another thread.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; serving continues on a background
  // thread inside httplib until stop().
  int bind_any_port(const std::string& host);
  void listen_after_bind();
  void stop();

 private:
  const CorpusIndex& index_;
  std::unique_ptr<httplib::Server> server_;
  std::thread worker_;
};

}  // namespace corag
