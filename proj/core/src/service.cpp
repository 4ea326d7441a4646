#include "corag/service.hpp"

#include "corag/tokenizer.hpp"
#include "httplib.h"
#include "json.hpp"

namespace corag {

namespace {

constexpr size_t kMaxPhraseTokens = 64;

void json_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
}

// nullopt means the response was already filled with an error
std::optional<PhraseQuery> parse_phrase(const nlohmann::json& body,
                                        const std::string& key,
                                        httplib::Response& res) {
  if (!body.contains(key) || !body[key].is_string()) {
    json_error(res, 400, "missing string field: " + key);
    return std::nullopt;
  }
  auto phrase = PhraseQuery::from_text(body[key].get<std::string>());
  if (phrase.empty()) {
    json_error(res, 400, "field tokenizes to nothing: " + key);
    return std::nullopt;
  }
  if (phrase.tokens.size() > kMaxPhraseTokens) {
    json_error(res, 400, "phrase exceeds " + std::to_string(kMaxPhraseTokens) +
                             " tokens: " + key);
    return std::nullopt;
  }
  return phrase;
}

}  // namespace

QueryService::QueryService(const CorpusIndex& index)
    : index_(index), server_(std::make_unique<httplib::Server>()) {
  server_->Post("/count", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      json_error(res, 400, "body must be a JSON object");
      return;
    }
    auto phrase = parse_phrase(body, "query", res);
    if (!phrase) return;
    res.set_content(nlohmann::json{{"count", index_.freq(*phrase)}}.dump(),
                    "application/json");
  });
  server_->Post("/cooc", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      json_error(res, 400, "body must be a JSON object");
      return;
    }
    auto head = parse_phrase(body, "head", res);
    if (!head) return;
    auto tail = parse_phrase(body, "tail", res);
    if (!tail) return;
    res.set_content(nlohmann::json{{"count", index_.cooc(*head, *tail)}}.dump(),
                    "application/json");
  });
  server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"status", "ok"},
                                   {"tokens", index_.stream().token_count()}}
                        .dump(),
                    "application/json");
  });
}

QueryService::~QueryService() { stop(); }

bool QueryService::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int QueryService::bind_any_port(const std::string& host) {
  int port = server_->bind_to_any_port(host);
  if (port <= 0) return port;
  worker_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void QueryService::listen_after_bind() { server_->listen_after_bind(); }

void QueryService::stop() {
  server_->stop();
  if (worker_.joinable()) worker_.join();
}

}  // namespace corag
