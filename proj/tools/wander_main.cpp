// wander: label-name-only document classification.
//
//   wander pipeline --config run.json
//   wander sweep --config run.json --param gamma --values 0.5,0.7,0.8,0.9
//
// Every subcommand accepts --config plus flags overriding individual fields.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "wander/classifier.hpp"
#include "wander/corpus.hpp"
#include "wander/eval.hpp"
#include "wander/expansion.hpp"
#include "wander/pipeline.hpp"
#include "wander/retrieval.hpp"
#include "wander/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wander;

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> corpus, labels, doc_vectors, word_vectors, sem_vectors, output_dir;
  std::optional<std::size_t> k, m, batch_size;
  std::optional<double> gamma, alpha, learning_rate, l2, stop_frac;
  std::optional<int> iterations, epochs, max_st_rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> external_embedder, semantic_embedder;
  bool deterministic = false;
  bool overwrite = false;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file");
  app->add_option("--corpus", o.corpus, "Corpus JSON Lines file");
  app->add_option("--labels", o.labels, "Label-spec JSON Lines file");
  app->add_option("--doc-vectors", o.doc_vectors, "WNDR document vectors");
  app->add_option("--word-vectors", o.word_vectors, "WNDR retrieval-space word vectors");
  app->add_option("--sem-vectors", o.sem_vectors, "WNDR semantic-space word vectors");
  app->add_option("--output-dir", o.output_dir, "Parent directory of run directories");
  app->add_option("-k,--k", o.k, "Documents retrieved per class");
  app->add_option("-m,--m", o.m, "Expansion candidates per class");
  app->add_option("--gamma", o.gamma, "Self-training confidence threshold");
  app->add_option("--alpha", o.alpha, "Exponent on the in-class term frequency");
  app->add_option("--iterations", o.iterations, "Expansion iterations");
  app->add_option("--seed", o.seed, "Shuffling seed");
  app->add_option("--learning-rate", o.learning_rate);
  app->add_option("--epochs", o.epochs);
  app->add_option("--l2", o.l2);
  app->add_option("--batch-size", o.batch_size);
  app->add_option("--max-st-rounds", o.max_st_rounds, "Self-training round cap");
  app->add_option("--stop-frac", o.stop_frac, "Self-training stops below this label-change fraction");
  app->add_option("--external-embedder", o.external_embedder, "Line-protocol command for query vectors");
  app->add_option("--semantic-embedder", o.semantic_embedder, "Line-protocol command for semantic vectors");
  app->add_flag("--deterministic", o.deterministic, "Omit timestamps from run manifests");
  app->add_flag("--overwrite", o.overwrite, "Reuse an existing run directory");
}

PipelineConfig resolve_config(const Overrides& o) {
  json j = o.config ? to_json(load_config(*o.config)) : to_json(PipelineConfig{});
  const auto set = [&j](const char* key, const auto& value) {
    if (value) j[key] = *value;
  };
  const auto set_train = [&j](const char* key, const auto& value) {
    if (value) j["train"][key] = *value;
  };
  set("corpus", o.corpus);
  set("labels", o.labels);
  set("doc_vectors", o.doc_vectors);
  set("word_vectors", o.word_vectors);
  set("sem_vectors", o.sem_vectors);
  set("output_dir", o.output_dir);
  set("k", o.k);
  set("m", o.m);
  set("gamma", o.gamma);
  set("alpha", o.alpha);
  set("iterations", o.iterations);
  set("seed", o.seed);
  set("external_embedder", o.external_embedder);
  set("semantic_embedder", o.semantic_embedder);
  set_train("learning_rate", o.learning_rate);
  set_train("epochs", o.epochs);
  set_train("l2", o.l2);
  set_train("batch_size", o.batch_size);
  set_train("max_st_rounds", o.max_st_rounds);
  set_train("stop_frac", o.stop_frac);
  if (o.deterministic) j["deterministic"] = true;
  if (o.overwrite) j["overwrite"] = true;
  return config_from_json(j);
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config:
      return 2;
    case ErrorCategory::data:
      return 3;
    case ErrorCategory::stage:
      return 4;
  }
  return 4;
}

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string("missing ") + flag);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(name, e);
  }
}

std::vector<std::string> ids_of(const std::vector<Document>& docs) {
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  return ids;
}

std::unique_ptr<LineProtocolEmbedder> maybe_embedder(const std::optional<std::string>& cmd) {
  return cmd ? std::make_unique<LineProtocolEmbedder>(*cmd) : nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-name-only document classification with dense retrieval, label-name expansion and "
               "self-training"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only log errors");

  Overrides o;

  auto* ingest = app.add_subcommand("ingest", "Validate and tokenize a corpus (and label specs)");
  std::optional<std::string> vocab_out;
  add_config_flags(ingest, o);
  ingest->add_option("--vocab", vocab_out, "Write the sorted token vocabulary here");

  auto* retrieve = app.add_subcommand("retrieve", "Stage-I retrieval with the label names");
  std::string labels_out;
  add_config_flags(retrieve, o);
  retrieve->add_option("--out", labels_out, "Pseudo-label JSON Lines output")->required();

  auto* expand = app.add_subcommand("expand", "Iterative label-name expansion");
  std::string expanded_out;
  std::optional<std::string> log_out;
  add_config_flags(expand, o);
  expand->add_option("--out", labels_out, "Final pseudo-label JSON Lines output")->required();
  expand->add_option("--expanded-labels", expanded_out, "Expanded label-spec output")->required();
  expand->add_option("--log", log_out, "Expansion log JSON Lines output");

  auto* train_cmd = app.add_subcommand("train", "Train the classifier on pseudo-labels");
  std::string pseudo_in;
  std::string model_out;
  add_config_flags(train_cmd, o);
  train_cmd->add_option("--pseudo-labels", pseudo_in, "Pseudo-label JSON Lines input")->required();
  train_cmd->add_option("--model", model_out, "Model output (WNDR)")->required();

  auto* self_cmd = app.add_subcommand("self-train", "Refine a model by self-training on the corpus");
  std::string model_in;
  std::optional<std::string> report_out;
  add_config_flags(self_cmd, o);
  self_cmd->add_option("--model", model_in, "Input model (WNDR)")->required();
  self_cmd->add_option("--out", model_out, "Output model (WNDR)")->required();
  self_cmd->add_option("--report", report_out, "Per-round JSON Lines report");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model or a prediction file against gold labels");
  std::optional<std::string> eval_model;
  std::optional<std::string> eval_preds;
  std::optional<std::string> json_out;
  bool as_json = false;
  add_config_flags(eval_cmd, o);
  eval_cmd->add_option("--model", eval_model, "Model (WNDR)");
  eval_cmd->add_option("--predictions", eval_preds, "JSON Lines {id, class_id}");
  eval_cmd->add_option("--out", json_out, "Also write the JSON report here");
  eval_cmd->add_flag("--json", as_json, "Print JSON instead of a table");

  auto* pilot_cmd = app.add_subcommand("pilot", "Hard label-name matching precision and coverage");
  add_config_flags(pilot_cmd, o);
  pilot_cmd->add_option("--out", json_out, "Also write the JSON report here");
  pilot_cmd->add_flag("--json", as_json, "Print JSON instead of a table");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Run all three stages end to end");
  add_config_flags(pipe_cmd, o);
  pipe_cmd->add_flag("--json", as_json, "Print the metrics JSON instead of a table");

  auto* sweep_cmd = app.add_subcommand("sweep", "One pipeline run per parameter value");
  std::string sweep_param;
  std::vector<double> sweep_values;
  bool parallel = false;
  add_config_flags(sweep_cmd, o);
  sweep_cmd->add_option("--param", sweep_param, "k or gamma")->required()->check(CLI::IsMember({"k", "gamma"}));
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->delimiter(',');
  sweep_cmd->add_option("--out", json_out, "Also write the sweep table as JSON here");
  sweep_cmd->add_flag("--parallel", parallel, "Run values concurrently");
  sweep_cmd->add_flag("--json", as_json, "Print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  spdlog::set_default_logger(spdlog::stderr_color_st("wander"));
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::err : spdlog::level::info);

  try {
    const PipelineConfig cfg = stage("config", [&] { return resolve_config(o); });
    const auto write_json = [&](const json& j) {
      if (json_out) open_out(*json_out) << j.dump(2) << '\n';
    };

    if (ingest->parsed()) {
      require(cfg.paths.corpus, "--corpus");
      const auto docs = stage("corpus", [&] { return load_corpus(cfg.paths.corpus); });
      const TokenizedCorpus tokenized(docs);
      std::set<std::string> vocab;
      std::size_t tokens = 0;
      std::size_t labeled = 0;
      for (const auto& d : tokenized.documents()) {
        vocab.insert(d.tokens.begin(), d.tokens.end());
        tokens += d.tokens.size();
      }
      for (const auto& d : docs) labeled += d.gold_label.has_value();
      json summary = {{"documents", docs.size()},
                      {"tokens", tokens},
                      {"vocabulary", vocab.size()},
                      {"labeled", labeled}};
      if (!cfg.paths.labels.empty()) {
        const auto specs = stage("corpus", [&] { return load_label_specs(cfg.paths.labels); });
        json classes = json::array();
        for (const auto& s : specs) classes.push_back({{"class_id", s.class_id}, {"query", query_text(s)}});
        summary["classes"] = classes;
      }
      if (vocab_out) {
        auto out = open_out(*vocab_out);
        for (const auto& w : vocab) out << w << '\n';
      }
      std::cout << summary.dump(2) << '\n';
      return 0;
    }

    if (pilot_cmd->parsed()) {
      require(cfg.paths.corpus, "--corpus");
      require(cfg.paths.labels, "--labels");
      const auto docs = stage("corpus", [&] { return load_corpus(cfg.paths.corpus); });
      const auto specs = stage("corpus", [&] { return load_label_specs(cfg.paths.labels); });
      const auto report =
          stage("eval", [&] { return hard_match_pilot(TokenizedCorpus(docs), specs, gold_labels(docs)); });
      write_json(to_json(report));
      std::cout << (as_json ? to_json(report).dump(2) + "\n" : format_report(report, specs));
      return 0;
    }

    if (pipe_cmd->parsed()) {
      const auto result = run_pipeline(cfg);
      json summary = {{"run_dir", result.run_dir.string()},
                      {"self_train_rounds", result.self_training.rounds},
                      {"expansions", json::array()}};
      for (const auto& s : result.specs) summary["expansions"].push_back(query_text(s));
      if (result.metrics.full) {
        summary["macro_f1"] = {{"stage1", result.metrics.stage1->macro_f1},
                               {"stage2", result.metrics.stage2->macro_f1},
                               {"full", result.metrics.full->macro_f1}};
      }
      if (as_json) {
        std::cout << summary.dump(2) << '\n';
      } else {
        std::cout << "run directory: " << result.run_dir.string() << '\n';
        for (const auto& s : result.specs) std::cout << "  class " << s.class_id << ": " << query_text(s) << '\n';
        if (result.metrics.full) {
          std::ifstream table(result.run_dir / "metrics.txt");
          std::cout << '\n' << table.rdbuf();
        }
      }
      return 0;
    }

    if (sweep_cmd->parsed()) {
      const auto param = sweep_param == "k" ? SweepParam::k : SweepParam::gamma;
      const auto rows = sweep(cfg, param, sweep_values, parallel);
      write_json(to_json(param, rows));
      std::cout << (as_json ? to_json(param, rows).dump(2) + "\n" : format_sweep(param, rows));
      return 0;
    }

    // The remaining subcommands work on one stage with explicit files.
    const PipelineInputs in = load_inputs(cfg);
    const std::size_t C = in.specs.size();

    if (retrieve->parsed()) {
      auto embedder = stage("embed-store", [&] { return maybe_embedder(cfg.external_embedder); });
      const auto labels =
          stage("retrieval", [&] { return dedup_assign(retrieve_all(in.store, in.specs, cfg.k, embedder.get())); });
      stage("output", [&] { write_pseudo_labels(labels_out, labels); });
      spdlog::info("{} pseudo-labeled documents written to {}", labels.size(), labels_out);
      return 0;
    }

    if (expand->parsed()) {
      auto q = stage("embed-store", [&] { return maybe_embedder(cfg.external_embedder); });
      auto s = stage("embed-store", [&] { return maybe_embedder(cfg.semantic_embedder); });
      const ExpansionConfig ecfg{cfg.k, cfg.m, cfg.iterations, cfg.alpha};
      const auto outcome = stage(
          "expansion", [&] { return run_expansion(in.store, TokenizedCorpus(in.docs), in.specs, ecfg, q.get(), s.get()); });
      stage("output", [&] {
        write_pseudo_labels(labels_out, outcome.pseudo_labels);
        save_label_specs(expanded_out, outcome.specs);
        if (log_out) write_expansion_log(*log_out, outcome.log);
      });
      for (const auto& spec : outcome.specs) std::cout << spec.class_id << '\t' << query_text(spec) << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      const auto labels = stage("retrieval", [&] { return read_pseudo_labels(pseudo_in); });
      const auto model = stage("classifier", [&] { return train(in.store, labels, C, cfg.train); });
      stage("output", [&] { save_model(model_out, model); });
      spdlog::info("model trained on {} documents written to {}", labels.size(), model_out);
      return 0;
    }

    if (self_cmd->parsed()) {
      const auto model = stage("classifier", [&] { return load_model(model_in); });
      const auto result = stage("self-train", [&] { return self_train(model, in.store, ids_of(in.docs), cfg.train); });
      stage("output", [&] {
        save_model(model_out, result.model);
        if (report_out) write_self_train_report(*report_out, result.reports);
      });
      std::cout << json{{"rounds", result.rounds},
                        {"history", result.history},
                        {"no_confident_examples", result.no_confident_examples},
                        {"degenerate_labels", result.degenerate_labels}}
                       .dump()
                << '\n';
      return 0;
    }

    if (eval_cmd->parsed()) {
      if (eval_model.has_value() == eval_preds.has_value()) {
        throw PipelineError("config", ConfigError("evaluate needs exactly one of --model or --predictions"));
      }
      LabelMap pred;
      stage("eval", [&] {
        if (eval_model) {
          const auto model = load_model(*eval_model);
          const auto ids = ids_of(in.docs);
          const auto preds = predict(model, in.store, ids);
          for (std::size_t i = 0; i < ids.size(); ++i) pred.emplace(ids[i], preds[i].class_id);
        } else {
          for (const auto& [id, a] : read_pseudo_labels(*eval_preds).assignments) pred.emplace(id, a.class_id);
        }
      });
      const auto report = stage("eval", [&] { return f1_report(pred, gold_labels(in.docs), C); });
      write_json(to_json(report));
      std::cout << (as_json ? to_json(report).dump(2) + "\n" : format_report(report, in.specs));
      return 0;
    }
  } catch (const PipelineError& e) {
    std::cerr << e.to_json().dump() << '\n';
    return exit_code(e.category());
  } catch (const Error& e) {
    std::cerr << PipelineError("cli", e).to_json().dump() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"stage", "cli"}, {"kind", "InternalError"}, {"message", e.what()}}}}.dump() << '\n';
    return 4;
  }
  return 0;
}
