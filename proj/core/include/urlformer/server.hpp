#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "urlformer/checkpoint.hpp"

namespace urlformer {

// Socket-free scoring core: JSON bodies in, status + JSON bodies out.
// The HTTP layer in run_server is a thin wrapper around this, so the
// whole request surface is testable in-process.
class ScoreService {
 public:
  static constexpr std::size_t kMaxBatch = 1024;

  ScoreService(Checkpoint ckpt, std::string digest_hex);

  struct Reply {
    int status = 0;
    std::string body;  // application/json
  };

  // POST /score: {"url": "..."} or {"urls": ["...", ...]} ->
  // {"results":[{"url","label","score"}...], "checkpoint_digest", "epoch"}.
  Reply score(const std::string& request_body) const;

  // GET /health.
  Reply health() const;

  const std::string& digest_hex() const { return digest_hex_; }
  std::uint32_t epoch() const { return ckpt_.epoch; }

 private:
  Checkpoint ckpt_;
  std::string digest_hex_;
};

// Blocks serving /score and /health until the process dies. Returns a
// process exit code on startup failure (bad checkpoint, unbindable port).
int run_server(const std::string& checkpoint_path, const std::string& host, int port,
               std::ostream& out, std::ostream& err);

}  // namespace urlformer
