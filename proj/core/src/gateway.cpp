#include "corag/gateway.hpp"

#include <cstdlib>
#include <sstream>

#include "corag/tokenizer.hpp"
#include "httplib.h"
#include "json.hpp"

namespace corag {

const std::string& default_few_shots() {
  static const std::string shots =
      "Question: When did the director of film Hypocrite (Film) die?\n"
      "Answer: The film Hypocrite was directed by Miguel Morayta. Miguel Morayta "
      "died on 19 June 2013. So the answer is 19 June 2013.";
  return shots;
}

const std::string& default_instruction() {
  static const std::string instruction =
      "Please answer the following questions. The format of the answers should be "
      "the same as the examples given before. Specifically, you need to think "
      "through the answer to this question step by step. Each sentence should only "
      "present a fact statement. Avoid using pronouns like He/She/It or possessive "
      "pronouns like His/Her/Its, but instead use specific names. At the end of "
      "your answer, use \"So the answer is\" to provide your answer.";
  return instruction;
}

std::string build_prompt(const PromptAssembly& assembly) {
  if (assembly.instruction_block.empty() || assembly.question.empty())
    throw std::invalid_argument("instruction and question must be non-empty");
  std::ostringstream out;
  if (!assembly.few_shot_block.empty()) out << assembly.few_shot_block << "\n\n";
  if (!assembly.context_docs.empty()) {
    out << "Background information that may be potentially useful in addressing "
           "your question:\n";
    for (size_t i = 0; i < assembly.context_docs.size(); ++i) {
      out << "[" << (i + 1) << "] " << assembly.context_docs[i] << "\n";
    }
    out << "\n";
  }
  out << assembly.instruction_block << "\n\n";
  out << "Question: " << assembly.question << "\n";
  out << "Answer:";
  if (!assembly.prior_sentences.empty()) out << " " << assembly.prior_sentences;
  return out.str();
}

void ScriptedGenerator::add_step(std::string prompt_contains, std::string text,
                                 int uses) {
  Step step;
  if (prompt_contains.empty()) {
    step.predicate = [](const std::string&) { return true; };
  } else {
    step.predicate = [needle = std::move(prompt_contains)](const std::string& p) {
      return p.find(needle) != std::string::npos;
    };
  }
  step.text = std::move(text);
  step.uses = uses;
  steps_.push_back(std::move(step));
}

Completion ScriptedGenerator::generate(const std::string& prompt, int max_tokens) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  for (auto& step : steps_) {
    if (step.uses == 0) continue;
    if (!step.predicate(prompt)) continue;
    if (step.uses > 0) --step.uses;
    // enforce the per-step cap at whitespace-word granularity
    std::istringstream in(step.text);
    std::vector<std::string> pieces;
    std::string piece;
    while (in >> piece && static_cast<int>(pieces.size()) < max_tokens)
      pieces.push_back(piece);
    std::string text = join_tokens(pieces);
    Completion c;
    c.completion_tokens = tokenize(text).size();
    c.text = std::move(text);
    return c;
  }
  throw GatewayError("scripted generator: no step matches the prompt", 0);
}

HttpGenerator::HttpGenerator(HttpGeneratorConfig config) : config_(std::move(config)) {
  // split scheme://host[:port] from path
  auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("endpoint must include scheme: " + config_.endpoint);
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_ = config_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    host_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
}

Completion HttpGenerator::generate(const std::string& prompt, int max_tokens) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0},
      {"max_tokens", max_tokens},
  };
  httplib::Client client(host_);
  client.set_connection_timeout(config_.timeout_ms / 1000,
                                (config_.timeout_ms % 1000) * 1000);
  client.set_read_timeout(config_.timeout_ms / 1000,
                          (config_.timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  int attempts = 0;
  auto start = std::chrono::steady_clock::now();
  for (; attempts <= config_.max_retries; ++attempts) {
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") ||
        reply["choices"].empty()) {
      last_error = "malformed completion response";
      continue;
    }
    Completion c;
    const auto& choice = reply["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content"))
      c.text = choice["message"]["content"].get<std::string>();
    else if (choice.contains("text"))
      c.text = choice["text"].get<std::string>();
    else {
      last_error = "completion response missing content";
      continue;
    }
    if (reply.contains("usage") && reply["usage"].contains("completion_tokens"))
      c.completion_tokens = reply["usage"]["completion_tokens"].get<uint64_t>();
    else
      c.completion_tokens = tokenize(c.text).size();
    c.call_latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return c;
  }
  throw GatewayError("generator request failed after " + std::to_string(attempts) +
                         " attempts: " + last_error,
                     attempts);
}

}  // namespace corag
