#include "urlformer/server.hpp"

#include <ostream>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/model.hpp"

namespace urlformer {
namespace {

using nlohmann::json;

ScoreService::Reply error_reply(int status, const std::string& message) {
  json body;
  body["error"] = message;
  return {status, body.dump()};
}

}  // namespace

ScoreService::ScoreService(Checkpoint ckpt, std::string digest_hex)
    : ckpt_(std::move(ckpt)), digest_hex_(std::move(digest_hex)) {}

ScoreService::Reply ScoreService::score(const std::string& request_body) const {
  json doc = json::parse(request_body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return error_reply(400, "request body must be a JSON object");
  }
  const bool has_url = doc.contains("url"), has_urls = doc.contains("urls");
  if (has_url == has_urls) {
    return error_reply(400, "give exactly one of \"url\" (string) or \"urls\" (array)");
  }

  std::vector<std::string> urls;
  if (has_url) {
    if (!doc["url"].is_string()) return error_reply(400, "\"url\" must be a string");
    urls.push_back(doc["url"].get<std::string>());
  } else {
    if (!doc["urls"].is_array()) return error_reply(400, "\"urls\" must be an array of strings");
    for (const auto& item : doc["urls"]) {
      if (!item.is_string()) return error_reply(400, "\"urls\" must be an array of strings");
      urls.push_back(item.get<std::string>());
    }
  }
  if (urls.size() > kMaxBatch) {
    return error_reply(413, "batch of " + std::to_string(urls.size()) +
                                " URLs exceeds the limit of " + std::to_string(kMaxBatch));
  }

  try {
    json results = json::array();
    if (!urls.empty()) {
      const auto preds = predict_batch(ckpt_.params, ckpt_.vocab, urls);
      for (std::size_t i = 0; i < urls.size(); ++i) {
        json row;
        row["url"] = urls[i];
        row["label"] = preds[i].label == 1 ? "malicious" : "benign";
        row["score"] = preds[i].score;
        results.push_back(row);
      }
    }
    json body;
    body["results"] = results;
    body["checkpoint_digest"] = digest_hex_;
    body["epoch"] = ckpt_.epoch;
    return {200, body.dump()};
  } catch (const std::exception& e) {
    return error_reply(500, std::string("scoring failed: ") + e.what());
  }
}

ScoreService::Reply ScoreService::health() const {
  json body;
  body["status"] = "ok";
  body["checkpoint_digest"] = digest_hex_;
  body["epoch"] = ckpt_.epoch;
  return {200, body.dump()};
}

int run_server(const std::string& checkpoint_path, const std::string& host, int port,
               std::ostream& out, std::ostream& err) {
  std::string digest_hex;
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(checkpoint_path, &digest_hex);
  } catch (const std::exception& e) {
    err << "cannot load checkpoint: " << e.what() << "\n";
    return 2;
  }
  ScoreService service(std::move(ckpt), digest_hex);

  httplib::Server svr;
  svr.Post("/score", [&service](const httplib::Request& req, httplib::Response& res) {
    const auto reply = service.score(req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  svr.Get("/health", [&service](const httplib::Request&, httplib::Response& res) {
    const auto reply = service.health();
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });

  out << "serving checkpoint " << digest_hex.substr(0, 12) << " (epoch " << service.epoch()
      << ") on " << host << ":" << port << "\n";
  out.flush();
  if (!svr.listen(host, port)) {
    err << "cannot bind " << host << ":" << std::to_string(port) << "\n";
    return 3;
  }
  return 0;
}

}  // namespace urlformer
