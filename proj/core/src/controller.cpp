#include "corag/controller.hpp"

#include <algorithm>
#include <cctype>

#include "corag/tokenizer.hpp"

namespace corag {

namespace {

std::string to_lower_ascii(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool contains_stop_phrase(const std::string& sentence) {
  return to_lower_ascii(sentence).find("so the answer is") != std::string::npos;
}

void install_context(std::vector<std::string>& context,
                     const RetrievalEvent& event, const RetrievalCorpus& corpus,
                     ContextPolicy policy) {
  if (policy == ContextPolicy::replace_latest) context.clear();
  for (const auto& [doc_id, score] : event.results)
    context.push_back(corpus.text_of(doc_id));
}

}  // namespace

TriggerDecision pre_generation_assess(const CorpusStats& stats,
                                      const EntitySet& entities,
                                      const RunConfig& config) {
  TriggerDecision d;
  d.stage = Stage::pre_generation;
  d.threshold = config.tau_entity;
  if (entities.entities.empty()) {
    // no extractable entities: retrieve rather than risk a silent gap
    d.statistic = 0.0;
    d.triggered = true;
    return d;
  }
  std::vector<PhraseQuery> phrases;
  for (const auto& e : entities.entities) {
    auto p = PhraseQuery::from_text(e);
    if (!p.empty()) phrases.push_back(std::move(p));
  }
  if (phrases.empty()) {
    d.statistic = 0.0;
    d.triggered = true;
    return d;
  }
  d.statistic = stats.avg_entity_freq(phrases);
  d.triggered = d.statistic < config.tau_entity;
  return d;
}

TriggerDecision verify_sentence(const CorpusStats& stats, const TripletSet& triplets,
                                const RunConfig& config) {
  TriggerDecision d;
  d.stage = Stage::runtime;
  d.threshold = static_cast<double>(config.tau_cooc);
  bool have_min = false;
  uint64_t min_cooc = 0;
  for (const auto& t : triplets.triplets) {
    if (!t.is_full()) continue;  // partial triplets lack a verifiable endpoint
    auto head = PhraseQuery::from_text(t.head);
    auto tail = PhraseQuery::from_text(*t.tail);
    if (head.empty() || tail.empty()) continue;
    uint64_t c = stats.cooc(head, tail);
    if (!have_min || c < min_cooc) {
      have_min = true;
      min_cooc = c;
      d.witness = t;
    }
  }
  if (!have_min) {
    d.triggered = false;
    d.witness.reset();
    return d;
  }
  d.statistic = static_cast<double>(min_cooc);
  d.triggered = min_cooc < config.tau_cooc;
  if (!d.triggered) d.witness.reset();
  return d;
}

std::string formulate_query(const Triplet& witness) {
  return witness.head + " " + witness.relation;
}

std::pair<std::string, std::string> segment_first_sentence(const std::string& raw) {
  auto guarded_period = [&](size_t i) {
    // find the word immediately before the period
    size_t end = i;
    size_t begin = end;
    while (begin > 0) {
      char c = raw[begin - 1];
      if (std::isalnum(static_cast<unsigned char>(c))) {
        --begin;
      } else {
        break;
      }
    }
    std::string word = raw.substr(begin, end - begin);
    if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0])))
      return true;
    return word == "Mr" || word == "Dr" || word == "St";
  };
  for (size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < raw.size() && raw[i + 1] != ' ') continue;
    if (c == '.' && guarded_period(i)) continue;
    return {raw.substr(0, i + 1), raw.substr(i + 1)};
  }
  return {raw, ""};
}

GenerationTrace run_question(const std::string& question, const CorpusStats& stats,
                             const RetrievalCorpus* retrieval_corpus,
                             GeneratorBackend& generator,
                             const TripletExtractor& extractor,
                             const RunConfig& config) {
  GenerationTrace trace;
  trace.question = question;

  std::vector<std::string> context_docs;
  const std::string& few_shots =
      config.few_shot_block.empty() ? default_few_shots() : config.few_shot_block;
  const std::string& instruction = config.instruction_block.empty()
                                       ? default_instruction()
                                       : config.instruction_block;

  trace.pre_decision = pre_generation_assess(stats, extract_entities(question), config);
  if (trace.pre_decision.triggered) {
    RetrievalEvent event;
    if (retrieval_corpus != nullptr) {
      event = retrieval_corpus->retrieve(question, config.top_k);
      install_context(context_docs, event, *retrieval_corpus, config.context_policy);
    } else {
      event.query = question;  // no corpus configured: log the request only
    }
    event.stage = Stage::pre_generation;
    event.step_index = 0;
    trace.retrieval_events.push_back(std::move(event));
    ++trace.retrieval_count;
  }

  std::string prior;
  auto call_generator = [&](const std::string& prompt) {
    trace.prompt_token_count += tokenize(prompt).size();
    Completion c = generator.generate(prompt, config.max_tokens_per_step);
    ++trace.llm_call_count;
    trace.generated_token_count += c.completion_tokens;
    return c;
  };

  for (int step = 0; step < config.max_sentences; ++step) {
    PromptAssembly assembly{few_shots, context_docs, instruction, question, prior};
    Completion completion;
    try {
      completion = call_generator(build_prompt(assembly));
    } catch (const GatewayError& e) {
      trace.failed = true;
      trace.failure_reason = e.what();
      break;
    }
    auto [sentence, remainder] = segment_first_sentence(completion.text);
    (void)remainder;  // discarded; regenerated on the next step
    if (sentence.empty()) break;

    SentenceRecord rec;
    while (true) {
      TripletSet triplets;
      bool extraction_ok = true;
      try {
        triplets = extractor.extract(sentence);
      } catch (const ExtractionError&) {
        extraction_ok = false;
        rec.verify_skipped = true;
      }
      if (!extraction_ok) break;  // accept as-is, event logged via verify_skipped

      TriggerDecision decision = verify_sentence(stats, triplets, config);
      rec.decisions.push_back(decision);
      if (!decision.triggered || rec.regenerations >= config.max_regen_per_sentence)
        break;

      RetrievalEvent event;
      try {
        std::string query = formulate_query(*decision.witness);
        if (retrieval_corpus != nullptr) {
          event = retrieval_corpus->retrieve(query, config.top_k);
        } else {
          event.query = query;
        }
      } catch (const std::exception&) {
        break;  // unretrievable query: keep the sentence
      }
      event.stage = Stage::runtime;
      event.step_index = step;
      if (retrieval_corpus != nullptr)
        install_context(context_docs, event, *retrieval_corpus,
                        config.context_policy);
      trace.retrieval_events.push_back(std::move(event));
      ++trace.retrieval_count;

      PromptAssembly regen{few_shots, context_docs, instruction, question, prior};
      Completion regen_completion;
      try {
        regen_completion = call_generator(build_prompt(regen));
      } catch (const GatewayError& e) {
        trace.failed = true;
        trace.failure_reason = e.what();
        break;
      }
      auto [regen_sentence, regen_rest] = segment_first_sentence(regen_completion.text);
      (void)regen_rest;
      ++rec.regenerations;
      if (!regen_sentence.empty()) sentence = regen_sentence;
      if (rec.regenerations >= config.max_regen_per_sentence)
        break;  // budget exhausted: accept without further verification
    }
    if (trace.failed) break;

    rec.text = sentence;
    trace.sentences.push_back(std::move(rec));
    if (!prior.empty()) prior += " ";
    prior += sentence;
    if (contains_stop_phrase(sentence)) break;
  }

  trace.final_text = prior;
  return trace;
}

namespace {

std::string stage_name(Stage s) {
  return s == Stage::pre_generation ? "pre_generation" : "runtime";
}

Stage stage_from_name(const std::string& s) {
  return s == "pre_generation" ? Stage::pre_generation : Stage::runtime;
}

nlohmann::json triplet_to_json(const Triplet& t) {
  nlohmann::json j = {{"head", t.head}, {"relation", t.relation}};
  if (t.tail) j["tail"] = *t.tail;
  return j;
}

Triplet triplet_from_json(const nlohmann::json& j) {
  Triplet t;
  t.head = j.at("head").get<std::string>();
  t.relation = j.at("relation").get<std::string>();
  if (j.contains("tail")) t.tail = j["tail"].get<std::string>();
  return t;
}

nlohmann::json decision_to_json(const TriggerDecision& d) {
  nlohmann::json j = {{"triggered", d.triggered},
                      {"stage", stage_name(d.stage)},
                      {"statistic", d.statistic},
                      {"threshold", d.threshold}};
  if (d.witness) j["witness"] = triplet_to_json(*d.witness);
  return j;
}

TriggerDecision decision_from_json(const nlohmann::json& j) {
  TriggerDecision d;
  d.triggered = j.at("triggered").get<bool>();
  d.stage = stage_from_name(j.at("stage").get<std::string>());
  d.statistic = j.at("statistic").get<double>();
  d.threshold = j.at("threshold").get<double>();
  if (j.contains("witness")) d.witness = triplet_from_json(j["witness"]);
  return d;
}

nlohmann::json event_to_json(const RetrievalEvent& e) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& [id, score] : e.results)
    results.push_back({{"doc_id", id}, {"score", score}});
  return {{"query", e.query},
          {"results", results},
          {"stage", stage_name(e.stage)},
          {"step_index", e.step_index}};
}

RetrievalEvent event_from_json(const nlohmann::json& j) {
  RetrievalEvent e;
  e.query = j.at("query").get<std::string>();
  for (const auto& r : j.at("results"))
    e.results.emplace_back(r.at("doc_id").get<std::string>(),
                           r.at("score").get<double>());
  e.stage = stage_from_name(j.at("stage").get<std::string>());
  e.step_index = j.at("step_index").get<int>();
  return e;
}

}  // namespace

nlohmann::json trace_to_json(const GenerationTrace& trace) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : trace.sentences) {
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& d : s.decisions) decisions.push_back(decision_to_json(d));
    sentences.push_back({{"text", s.text},
                         {"decisions", decisions},
                         {"regenerations", s.regenerations},
                         {"verify_skipped", s.verify_skipped}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : trace.retrieval_events) events.push_back(event_to_json(e));
  return {{"id", trace.id},
          {"question", trace.question},
          {"pre_decision", decision_to_json(trace.pre_decision)},
          {"sentences", sentences},
          {"retrieval_events", events},
          {"generated_token_count", trace.generated_token_count},
          {"prompt_token_count", trace.prompt_token_count},
          {"llm_call_count", trace.llm_call_count},
          {"retrieval_count", trace.retrieval_count},
          {"final_text", trace.final_text},
          {"failed", trace.failed},
          {"failure_reason", trace.failure_reason}};
}

GenerationTrace trace_from_json(const nlohmann::json& j) {
  GenerationTrace trace;
  trace.id = j.at("id").get<std::string>();
  trace.question = j.at("question").get<std::string>();
  trace.pre_decision = decision_from_json(j.at("pre_decision"));
  for (const auto& s : j.at("sentences")) {
    SentenceRecord rec;
    rec.text = s.at("text").get<std::string>();
    for (const auto& d : s.at("decisions"))
      rec.decisions.push_back(decision_from_json(d));
    rec.regenerations = s.at("regenerations").get<int>();
    rec.verify_skipped = s.at("verify_skipped").get<bool>();
    trace.sentences.push_back(std::move(rec));
  }
  for (const auto& e : j.at("retrieval_events"))
    trace.retrieval_events.push_back(event_from_json(e));
  trace.generated_token_count = j.at("generated_token_count").get<uint64_t>();
  trace.prompt_token_count = j.at("prompt_token_count").get<uint64_t>();
  trace.llm_call_count = j.at("llm_call_count").get<int>();
  trace.retrieval_count = j.at("retrieval_count").get<int>();
  trace.final_text = j.at("final_text").get<std::string>();
  trace.failed = j.at("failed").get<bool>();
  trace.failure_reason = j.at("failure_reason").get<std::string>();
  return trace;
}

}  // namespace corag
