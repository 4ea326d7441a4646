#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <string>
#include <thread>

#include "corag/gateway.hpp"
#include "corag/tokenizer.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace corag;

TEST_CASE("prompt rendering golden: question only") {
  PromptAssembly a;
  a.instruction_block = "Answer briefly.";
  a.question = "Who wrote Hamlet?";
  CHECK(build_prompt(a) == "Answer briefly.\n\nQuestion: Who wrote Hamlet?\nAnswer:");
}

TEST_CASE("prompt rendering golden: full assembly") {
  PromptAssembly a;
  a.few_shot_block = "Question: demo?\nAnswer: demo.";
  a.context_docs = {"First doc.", "Second doc.", "Third doc."};
  a.instruction_block = "Answer briefly.";
  a.question = "Who wrote Hamlet?";
  a.prior_sentences = "Hamlet is a play.";
  const std::string expected =
      "Question: demo?\nAnswer: demo.\n\n"
      "Background information that may be potentially useful in addressing your "
      "question:\n"
      "[1] First doc.\n"
      "[2] Second doc.\n"
      "[3] Third doc.\n"
      "\n"
      "Answer briefly.\n\n"
      "Question: Who wrote Hamlet?\n"
      "Answer: Hamlet is a play.";
  CHECK(build_prompt(a) == expected);
  // byte-stable across calls
  CHECK(build_prompt(a) == expected);
}

TEST_CASE("prompt rendering requires instruction and question") {
  PromptAssembly a;
  a.question = "q?";
  CHECK_THROWS(build_prompt(a));
  a.instruction_block = "i";
  a.question = "";
  CHECK_THROWS(build_prompt(a));
}

TEST_CASE("default blocks carry the expected markers") {
  CHECK(default_few_shots().find("Hypocrite") != std::string::npos);
  CHECK(default_few_shots().find("So the answer is 19 June 2013.") != std::string::npos);
  CHECK(default_instruction().find("Avoid using pronouns") != std::string::npos);
  CHECK(default_instruction().find("So the answer is") != std::string::npos);
}

TEST_CASE("scripted generator emits steps in order with token accounting") {
  ScriptedGenerator gen;
  gen.add_step("", "First answer sentence.", 1);
  gen.add_step("", "Second answer sentence.", 1);
  auto c1 = gen.generate("anything", 64);
  CHECK(c1.text == "First answer sentence.");
  CHECK(c1.completion_tokens == tokenize(c1.text).size());
  auto c2 = gen.generate("anything", 64);
  CHECK(c2.text == "Second answer sentence.");
  CHECK_THROWS_AS(gen.generate("anything", 64), GatewayError);
}

TEST_CASE("scripted generator predicate gating and unlimited steps") {
  ScriptedGenerator gen;
  gen.add_step("needle", "matched", -1);
  gen.add_step("", "fallback", -1);
  CHECK(gen.generate("with needle inside", 8).text == "matched");
  CHECK(gen.generate("nothing here", 8).text == "fallback");
  CHECK(gen.generate("with needle inside", 8).text == "matched");
}

TEST_CASE("identical scripts replay identically") {
  auto build = [] {
    ScriptedGenerator g;
    g.add_step("a", "alpha text", 2);
    g.add_step("", "omega text", -1);
    return g;
  };
  auto g1 = build();
  auto g2 = build();
  for (const char* p : {"a first", "b second", "a third", "a fourth"}) {
    auto c1 = g1.generate(p, 16);
    auto c2 = g2.generate(p, 16);
    CHECK(c1.text == c2.text);
    CHECK(c1.completion_tokens == c2.completion_tokens);
  }
}

TEST_CASE("max_tokens caps scripted output") {
  ScriptedGenerator gen;
  gen.add_step("", "one two three four five", -1);
  auto c = gen.generate("p", 1);
  CHECK(c.text == "one");
  CHECK(tokenize(c.text).size() <= 1);
  CHECK_THROWS(gen.generate("p", 0));
}

TEST_CASE("http generator round-trips against a stub server") {
  httplib::Server stub;
  std::atomic<int> hits{0};
  std::string seen_body;
  stub.Post("/v1/chat/completions",
            [&](const httplib::Request& req, httplib::Response& res) {
              ++hits;
              seen_body = req.body;
              nlohmann::json reply = {
                  {"choices",
                   nlohmann::json::array(
                       {{{"message", {{"role", "assistant"},
                                      {"content", "Canned reply text."}}}}})},
                  {"usage", {{"completion_tokens", 4}}},
              };
              res.set_content(reply.dump(), "application/json");
            });
  int port = stub.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server([&] { stub.listen_after_bind(); });
  stub.wait_until_ready();

  HttpGeneratorConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "stub-model";
  HttpGenerator gen(cfg);
  auto c = gen.generate("hello prompt", 32);
  CHECK(c.text == "Canned reply text.");
  CHECK(c.completion_tokens == 4);
  CHECK(hits == 1);

  auto body = nlohmann::json::parse(seen_body);
  CHECK(body["model"] == "stub-model");
  CHECK(body["temperature"] == 0);
  CHECK(body["max_tokens"] == 32);
  CHECK(body["messages"][0]["content"] == "hello prompt");

  stub.stop();
  server.join();
}

TEST_CASE("http generator retries then reports the attempt count") {
  httplib::Server stub;
  std::atomic<int> hits{0};
  stub.Post("/v1/chat/completions",
            [&](const httplib::Request&, httplib::Response& res) {
              ++hits;
              res.status = 500;
            });
  int port = stub.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server([&] { stub.listen_after_bind(); });
  stub.wait_until_ready();

  HttpGeneratorConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "stub-model";
  cfg.max_retries = 2;
  HttpGenerator gen(cfg);
  try {
    gen.generate("p", 8);
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.attempts() == 3);  // initial call + 2 retries
  }
  CHECK(hits == 3);

  stub.stop();
  server.join();
}
