#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace corag {

// Prompt parts rendered in order: few-shots, retrieved context (if any),
// instruction, question, prior sentences.
struct PromptAssembly {
  std::string few_shot_block;
  std::vector<std::string> context_docs;
  std::string instruction_block;
  std::string question;
  std::string prior_sentences;
};

// Default demonstration and instruction used when the caller supplies none.
const std::string& default_few_shots();
const std::string& default_instruction();

std::string build_prompt(const PromptAssembly& assembly);

struct Completion {
  std::string text;
  uint64_t completion_tokens = 0;
  std::chrono::milliseconds call_latency{0};
};

class GatewayError : public std::runtime_error {
 public:
  GatewayError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_ = 0;
};

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual Completion generate(const std::string& prompt, int max_tokens) = 0;
};

// Deterministic test double. Steps are tried in order; the first step with
// remaining uses whose predicate accepts the prompt is emitted. No matching
// step (script exhausted or predicate mismatch) is an error.
class ScriptedGenerator : public GeneratorBackend {
 public:
  struct Step {
    std::function<bool(const std::string& prompt)> predicate;
    std::string text;
    int uses = 1;  // -1 = unlimited
  };

  void add_step(Step step) { steps_.push_back(std::move(step)); }
  // Convenience: match prompts containing the substring ("" matches all).
  void add_step(std::string prompt_contains, std::string text, int uses = 1);

  Completion generate(const std::string& prompt, int max_tokens) override;

 private:
  std::vector<Step> steps_;
};

struct HttpGeneratorConfig {
  std::string endpoint;        // e.g. http://127.0.0.1:8081/v1/chat/completions
  std::string model;
  std::string api_key_env;     // env var holding the bearer token; may be empty
  int timeout_ms = 30000;
  int max_retries = 2;
};

// Chat-completions style JSON POST with temperature 0.
class HttpGenerator : public GeneratorBackend {
 public:
  explicit HttpGenerator(HttpGeneratorConfig config);
  Completion generate(const std::string& prompt, int max_tokens) override;

 private:
  HttpGeneratorConfig config_;
  std::string host_;  // scheme://host:port
  std::string path_;
};

}  // namespace corag
