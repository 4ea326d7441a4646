#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <unordered_set>

#include "CLI11.hpp"
#include "corag/controller.hpp"
#include "corag/corpus.hpp"
#include "corag/eval.hpp"
#include "corag/extraction.hpp"
#include "corag/gateway.hpp"
#include "corag/retriever.hpp"
#include "corag/service.hpp"
#include "corag/suffix_index.hpp"
#include "json.hpp"

namespace {

// exit codes: 0 ok, 1 usage, 2 data, 3 backend, 4 index version mismatch
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;
constexpr int kExitIndexVersion = 4;

struct ToolConfig {
  corag::RunConfig run;
  std::string generator_backend = "remote";  // remote | script
  std::string generator_endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string generator_model = "default";
  std::string generator_api_key_env;
  int generator_timeout_ms = 30000;
  int generator_retries = 2;
  std::string generator_script;  // path, for backend=script
  std::string extractor_backend = "rule";  // rule | fixture | remote
  std::string extractor_fixture;           // path, for backend=fixture
  std::string few_shots_path;
};

void apply_config_file(ToolConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j[key].get<std::decay_t<decltype(slot)>>();
  };
  get("tau_entity", cfg.run.tau_entity);
  get("tau_cooc", cfg.run.tau_cooc);
  get("window_size", cfg.run.window_size);
  get("top_k", cfg.run.top_k);
  get("max_sentences", cfg.run.max_sentences);
  get("max_tokens_per_step", cfg.run.max_tokens_per_step);
  get("max_regen_per_sentence", cfg.run.max_regen_per_sentence);
  if (j.contains("context_policy")) {
    std::string p = j["context_policy"].get<std::string>();
    if (p == "accumulate")
      cfg.run.context_policy = corag::ContextPolicy::accumulate;
    else if (p == "replace_latest")
      cfg.run.context_policy = corag::ContextPolicy::replace_latest;
    else
      throw std::runtime_error("unknown context_policy: " + p);
  }
  get("generator_backend", cfg.generator_backend);
  get("generator_endpoint", cfg.generator_endpoint);
  get("generator_model", cfg.generator_model);
  get("generator_api_key_env", cfg.generator_api_key_env);
  get("generator_timeout_ms", cfg.generator_timeout_ms);
  get("generator_retries", cfg.generator_retries);
  get("generator_script", cfg.generator_script);
  get("extractor_backend", cfg.extractor_backend);
  get("extractor_fixture", cfg.extractor_fixture);
  get("few_shots_path", cfg.few_shots_path);
}

std::unique_ptr<corag::GeneratorBackend> make_generator(const ToolConfig& cfg) {
  if (cfg.generator_backend == "script") {
    if (cfg.generator_script.empty())
      throw std::runtime_error("generator_backend=script requires generator_script");
    std::ifstream in(cfg.generator_script);
    if (!in)
      throw std::runtime_error("cannot open script file: " + cfg.generator_script);
    nlohmann::json steps = nlohmann::json::parse(in);
    auto gen = std::make_unique<corag::ScriptedGenerator>();
    for (const auto& s : steps) {
      gen->add_step(s.value("contains", std::string{}),
                    s.at("text").get<std::string>(), s.value("uses", -1));
    }
    return gen;
  }
  if (cfg.generator_backend == "remote") {
    corag::HttpGeneratorConfig hc;
    hc.endpoint = cfg.generator_endpoint;
    hc.model = cfg.generator_model;
    hc.api_key_env = cfg.generator_api_key_env;
    hc.timeout_ms = cfg.generator_timeout_ms;
    hc.max_retries = cfg.generator_retries;
    return std::make_unique<corag::HttpGenerator>(hc);
  }
  throw std::runtime_error("unknown generator_backend: " + cfg.generator_backend);
}

std::shared_ptr<corag::TripletExtractor> make_extractor(
    const ToolConfig& cfg, std::shared_ptr<corag::GeneratorBackend> generator) {
  if (cfg.extractor_backend == "rule")
    return std::make_shared<corag::RuleBasedExtractor>();
  if (cfg.extractor_backend == "fixture") {
    if (cfg.extractor_fixture.empty())
      throw std::runtime_error("extractor_backend=fixture requires extractor_fixture");
    auto fx = std::make_shared<corag::FixtureExtractor>(cfg.extractor_fixture);
    fx->set_fallback(std::make_shared<corag::RuleBasedExtractor>());
    return fx;
  }
  if (cfg.extractor_backend == "remote")
    return std::make_shared<corag::RemoteExtractor>(std::move(generator));
  throw std::runtime_error("unknown extractor_backend: " + cfg.extractor_backend);
}

int cmd_index_build(const std::string& corpus_path, uint64_t window_size,
                    const std::string& out_path) {
  auto start = std::chrono::steady_clock::now();
  auto docs = corag::read_jsonl_corpus(corpus_path);
  auto [stream, skipped] = corag::ingest(docs, window_size);
  auto index = corag::CorpusIndex::build(std::move(stream));
  index.save(out_path);
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  std::cout << "documents: " << index.stream().document_count()
            << "\nskipped_empty: " << skipped
            << "\ntokens: " << index.stream().token_count()
            << "\nwindows: " << index.stream().window_count()
            << "\nbuild_ms: " << elapsed.count() << "\n";
  return kExitOk;
}

int cmd_query(const std::string& index_path, const std::string& kind,
              const std::vector<std::string>& phrases) {
  corag::CorpusIndex index = corag::CorpusIndex::load(index_path);
  if (kind == "count") {
    if (phrases.size() != 1) {
      std::cerr << "count takes exactly one phrase\n";
      return kExitUsage;
    }
    std::cout << index.freq(corag::PhraseQuery::from_text(phrases[0])) << "\n";
    return kExitOk;
  }
  if (kind == "cooc") {
    if (phrases.size() != 2) {
      std::cerr << "cooc takes exactly two phrases\n";
      return kExitUsage;
    }
    std::cout << index.cooc(corag::PhraseQuery::from_text(phrases[0]),
                            corag::PhraseQuery::from_text(phrases[1]))
              << "\n";
    return kExitOk;
  }
  std::cerr << "unknown query kind: " << kind << "\n";
  return kExitUsage;
}

int cmd_run(const std::string& dataset_path, const ToolConfig& cfg,
            const std::string& index_path, const std::string& retrieval_path,
            const std::string& out_path) {
  auto samples = corag::read_jsonl_dataset(dataset_path);
  corag::CorpusIndex index = corag::CorpusIndex::load(index_path);
  corag::RetrievalCorpus retrieval =
      corag::RetrievalCorpus::build(corag::read_jsonl_corpus(retrieval_path));

  // resume: skip ids already present in the output file
  std::unordered_set<std::string> done;
  {
    std::ifstream existing(out_path);
    std::string line;
    while (std::getline(existing, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.contains("id"))
        done.insert(j["id"].get<std::string>());
    }
  }

  std::shared_ptr<corag::GeneratorBackend> generator = make_generator(cfg);
  auto extractor = make_extractor(cfg, generator);
  corag::RunConfig run = cfg.run;
  if (!cfg.few_shots_path.empty()) {
    std::ifstream in(cfg.few_shots_path);
    if (!in)
      throw std::runtime_error("cannot open few-shots file: " + cfg.few_shots_path);
    run.few_shot_block.assign(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
  }

  std::ofstream out(out_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  size_t failures = 0;
  for (const auto& sample : samples) {
    if (done.count(sample.id) > 0) continue;
    corag::GenerationTrace trace;
    try {
      trace = corag::run_question(sample.question, index, &retrieval, *generator,
                                  *extractor, run);
    } catch (const std::exception& e) {
      trace.question = sample.question;
      trace.failed = true;
      trace.failure_reason = e.what();
    }
    trace.id = sample.id;
    if (trace.failed) ++failures;
    out << corag::trace_to_json(trace).dump() << "\n";
    out.flush();
  }
  std::cout << "questions: " << samples.size() << "\nskipped_done: " << done.size()
            << "\nfailures: " << failures << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& dataset_path, const std::string& trace_path,
             const std::string& index_path, const std::string& out_path) {
  auto samples = corag::read_jsonl_dataset(dataset_path);
  corag::CorpusIndex index = corag::CorpusIndex::load(index_path);
  std::ifstream in(trace_path);
  if (!in) throw std::runtime_error("cannot open trace file: " + trace_path);
  std::vector<corag::GenerationTrace> traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    traces.push_back(corag::trace_from_json(nlohmann::json::parse(line)));
  }
  auto report = corag::aggregate(samples, traces, index);
  std::string rendered = corag::report_to_json(report).dump(2);
  if (out_path.empty()) {
    std::cout << rendered << "\n";
  } else {
    std::ofstream out(out_path);
    out << rendered << "\n";
  }
  return kExitOk;
}

int cmd_serve(const std::string& index_path, const std::string& bind_address) {
  corag::CorpusIndex index = corag::CorpusIndex::load(index_path);
  auto colon = bind_address.rfind(':');
  if (colon == std::string::npos)
    throw std::runtime_error("bind address must be host:port");
  std::string host = bind_address.substr(0, colon);
  int port = std::stoi(bind_address.substr(colon + 1));
  corag::QueryService service(index);
  std::cout << "serving " << index.stream().token_count() << " tokens on " << host
            << ":" << port << "\n";
  if (!service.listen(host, port))
    throw std::runtime_error("cannot bind " + bind_address);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpus-grounded dynamic RAG engine"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("index-build", "build a statistics index");
  std::string corpus_path, out_path;
  uint64_t window_size = 1000;
  build->add_option("--corpus", corpus_path, "JSONL corpus")->required();
  build->add_option("--window-size", window_size, "co-occurrence window (tokens)");
  build->add_option("--out", out_path, "output index path")->required();

  auto* query = app.add_subcommand("query", "query a built index");
  std::string index_path, kind;
  std::vector<std::string> phrases;
  query->add_option("--index", index_path, "index path")->required();
  query->add_option("--kind", kind, "count | cooc")->required();
  query->add_option("phrases", phrases, "phrase(s)")->required();

  auto* run = app.add_subcommand("run", "answer a QA dataset");
  std::string dataset_path, config_path, retrieval_path, trace_out;
  ToolConfig cfg;
  run->add_option("--dataset", dataset_path, "JSONL QA dataset")->required();
  run->add_option("--config", config_path, "flat JSON config");
  run->add_option("--index", index_path, "statistics index path")->required();
  run->add_option("--retrieval-corpus", retrieval_path, "JSONL passage corpus")
      ->required();
  run->add_option("--out", trace_out, "trace output (JSONL, appended)")->required();
  double tau_entity_flag = -1, tau_cooc_flag = -1;
  int top_k_flag = -1, max_sentences_flag = -1;
  run->add_option("--tau-entity", tau_entity_flag, "pre-generation threshold");
  run->add_option("--tau-cooc", tau_cooc_flag, "runtime cooc threshold");
  run->add_option("--top-k", top_k_flag, "retrieved docs per query");
  run->add_option("--max-sentences", max_sentences_flag, "sentence budget");

  auto* eval = app.add_subcommand("eval", "score traces against a dataset");
  std::string eval_traces, eval_out;
  eval->add_option("--dataset", dataset_path, "JSONL QA dataset")->required();
  eval->add_option("--traces", eval_traces, "trace JSONL from run")->required();
  eval->add_option("--index", index_path, "statistics index path")->required();
  eval->add_option("--out", eval_out, "report output (default stdout)");

  auto* serve = app.add_subcommand("serve", "serve count/cooc queries over HTTP");
  std::string bind_address = "127.0.0.1:8080";
  serve->add_option("--index", index_path, "index path")->required();
  serve->add_option("--bind", bind_address, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_index_build(corpus_path, window_size, out_path);
    if (query->parsed()) return cmd_query(index_path, kind, phrases);
    if (run->parsed()) {
      if (!config_path.empty()) apply_config_file(cfg, config_path);
      if (tau_entity_flag >= 0) cfg.run.tau_entity = tau_entity_flag;
      if (tau_cooc_flag >= 0) cfg.run.tau_cooc = static_cast<uint64_t>(tau_cooc_flag);
      if (top_k_flag > 0) cfg.run.top_k = top_k_flag;
      if (max_sentences_flag > 0) cfg.run.max_sentences = max_sentences_flag;
      return cmd_run(dataset_path, cfg, index_path, retrieval_path, trace_out);
    }
    if (eval->parsed())
      return cmd_eval(dataset_path, eval_traces, index_path, eval_out);
    if (serve->parsed()) return cmd_serve(index_path, bind_address);
  } catch (const corag::IndexVersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIndexVersion;
  } catch (const corag::GatewayError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
