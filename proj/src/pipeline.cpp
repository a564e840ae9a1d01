#include "wander/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "wander/text.hpp"

namespace wander {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field \"") + key + "\": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key \"" + key + "\" in " + where);
  }
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"corpus", "labels", "doc_vectors", "word_vectors", "sem_vectors", "output_dir", "k", "m", "gamma",
                  "alpha", "iterations", "seed", "train", "external_embedder", "semantic_embedder", "deterministic",
                  "overwrite"},
                 "config");
  PipelineConfig cfg;
  const auto path_field = [&](const char* key, fs::path& out) {
    if (j.contains(key)) out = resolve(base_dir, get_field<std::string>(j, key));
  };
  path_field("corpus", cfg.paths.corpus);
  path_field("labels", cfg.paths.labels);
  path_field("doc_vectors", cfg.paths.doc_vectors);
  path_field("word_vectors", cfg.paths.word_vectors);
  path_field("sem_vectors", cfg.paths.sem_vectors);
  path_field("output_dir", cfg.paths.output_dir);

  if (j.contains("k")) cfg.k = get_field<std::size_t>(j, "k");
  if (j.contains("m")) cfg.m = get_field<std::size_t>(j, "m");
  if (j.contains("alpha")) cfg.alpha = get_field<double>(j, "alpha");
  if (j.contains("iterations")) cfg.iterations = get_field<int>(j, "iterations");
  if (j.contains("gamma")) cfg.train.gamma = get_field<double>(j, "gamma");
  if (j.contains("seed")) cfg.train.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("deterministic")) cfg.deterministic = get_field<bool>(j, "deterministic");
  if (j.contains("overwrite")) cfg.overwrite = get_field<bool>(j, "overwrite");
  for (const char* key : {"external_embedder", "semantic_embedder"}) {
    if (j.contains(key) && !j.at(key).is_null()) {
      (std::string(key) == "external_embedder" ? cfg.external_embedder : cfg.semantic_embedder) =
          get_field<std::string>(j, key);
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (!t.is_object()) throw ConfigError("\"train\" must be an object");
    reject_unknown(t, {"learning_rate", "epochs", "l2", "batch_size", "max_st_rounds", "stop_frac"}, "train");
    if (t.contains("learning_rate")) cfg.train.learning_rate = get_field<double>(t, "learning_rate");
    if (t.contains("epochs")) cfg.train.epochs = get_field<int>(t, "epochs");
    if (t.contains("l2")) cfg.train.l2 = get_field<double>(t, "l2");
    if (t.contains("batch_size")) cfg.train.batch_size = get_field<std::size_t>(t, "batch_size");
    if (t.contains("max_st_rounds")) cfg.train.max_st_rounds = get_field<int>(t, "max_st_rounds");
    if (t.contains("stop_frac")) cfg.train.stop_frac = get_field<double>(t, "stop_frac");
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const PipelineConfig& c) {
  json j = {{"corpus", c.paths.corpus.string()},
            {"labels", c.paths.labels.string()},
            {"doc_vectors", c.paths.doc_vectors.string()},
            {"word_vectors", c.paths.word_vectors.string()},
            {"sem_vectors", c.paths.sem_vectors.string()},
            {"output_dir", c.paths.output_dir.string()},
            {"k", c.k},
            {"m", c.m},
            {"gamma", c.train.gamma},
            {"alpha", c.alpha},
            {"iterations", c.iterations},
            {"seed", c.train.seed},
            {"train",
             {{"learning_rate", c.train.learning_rate},
              {"epochs", c.train.epochs},
              {"l2", c.train.l2},
              {"batch_size", c.train.batch_size},
              {"max_st_rounds", c.train.max_st_rounds},
              {"stop_frac", c.train.stop_frac}}},
            {"external_embedder", c.external_embedder ? json(*c.external_embedder) : json(nullptr)},
            {"semantic_embedder", c.semantic_embedder ? json(*c.semantic_embedder) : json(nullptr)},
            {"deterministic", c.deterministic},
            {"overwrite", c.overwrite}};
  return j;
}

void validate(const PipelineConfig& c) {
  for (const auto& [name, path] : {std::pair{"corpus", &c.paths.corpus}, std::pair{"labels", &c.paths.labels},
                                   std::pair{"doc_vectors", &c.paths.doc_vectors},
                                   std::pair{"word_vectors", &c.paths.word_vectors},
                                   std::pair{"sem_vectors", &c.paths.sem_vectors}}) {
    if (path->empty()) throw ConfigError(std::string("missing path \"") + name + "\"");
  }
  if (c.k < 1) throw ConfigError("k must be >= 1");
  if (c.m < 1) throw ConfigError("m must be >= 1");
  if (c.iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(c.alpha > 0.0)) throw ConfigError("alpha must be positive");
  validate(c.train);
}

namespace {

// The fields that can change a run's results; also what a run directory
// records as its config.json.
json result_fields(const PipelineConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  j.erase("deterministic");
  j.erase("overwrite");
  return j;
}

}  // namespace

std::string config_hash(const PipelineConfig& config) {
  const std::string canonical = result_fields(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path run_directory(const PipelineConfig& config) {
  return config.paths.output_dir / ("run-" + config_hash(config));
}

// ---------------------------------------------------------------------------
// Running

namespace {

template <typename F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(stage, e);
  } catch (const std::exception& e) {
    throw PipelineError(stage, Error("InternalError", ErrorCategory::stage, e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

fs::path prepare_run_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir) && !overwrite) {
    throw ConfigError("run directory " + dir.string() + " already exists (set overwrite to reuse it)");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

struct Embedders {
  std::unique_ptr<LineProtocolEmbedder> query;
  std::unique_ptr<LineProtocolEmbedder> semantic;
};

Embedders start_embedders(const PipelineConfig& config) {
  Embedders e;
  if (config.external_embedder) e.query = std::make_unique<LineProtocolEmbedder>(*config.external_embedder);
  if (config.semantic_embedder) e.semantic = std::make_unique<LineProtocolEmbedder>(*config.semantic_embedder);
  return e;
}

std::optional<MetricsReport> evaluate(const std::vector<Document>& docs, const std::vector<Prediction>& preds,
                                      std::size_t num_classes) {
  LabelMap gold;
  LabelMap pred;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].gold_label) continue;
    gold.emplace(docs[i].id, *docs[i].gold_label);
    pred.emplace(docs[i].id, preds[i].class_id);
  }
  if (gold.empty()) return std::nullopt;
  return f1_report(pred, gold, num_classes);
}

std::vector<std::string> doc_ids(const std::vector<Document>& docs) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) ids.push_back(d.id);
  return ids;
}

void write_predictions(const fs::path& path, const std::vector<Document>& docs,
                       const std::vector<Prediction>& preds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out << json{{"id", docs[i].id}, {"class_id", preds[i].class_id}, {"confidence", preds[i].confidence}}.dump()
        << '\n';
  }
}

json metrics_json(const StageMetrics& m) {
  json j = json::object();
  if (m.stage1) j["stage1"] = to_json(*m.stage1);
  if (m.stage2) j["stage2"] = to_json(*m.stage2);
  if (m.full) j["full"] = to_json(*m.full);
  return j;
}

std::string metrics_text(const StageMetrics& m, const std::vector<LabelSpec>& specs) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(10) << "stage" << std::right << std::setw(10) << "micro_f1" << std::setw(10)
      << "macro_f1" << '\n';
  const std::pair<const char*, const std::optional<MetricsReport>*> rows[] = {
      {"stage1", &m.stage1}, {"stage2", &m.stage2}, {"full", &m.full}};
  for (const auto& [name, report] : rows) {
    if (!*report) continue;
    out << std::left << std::setw(10) << name << std::right << std::setw(10) << (*report)->micro_f1
        << std::setw(10) << (*report)->macro_f1 << '\n';
  }
  if (m.full) out << "\nfinal model, per class\n" << format_report(*m.full, specs);
  return out.str();
}

json run_manifest(const PipelineConfig& config, const std::string& started, const std::string& kind) {
  json j = {{"kind", kind}, {"config_hash", config_hash(config)}, {"status", "ok"}};
  if (!config.deterministic) {
    j["started_at"] = started;
    j["finished_at"] = timestamp_utc();
  }
  return j;
}

}  // namespace

PipelineInputs load_inputs(const PipelineConfig& config) {
  in_stage("config", [&] { validate(config); });
  PipelineInputs in;
  in.docs = in_stage("corpus", [&] {
    auto docs = load_corpus(config.paths.corpus);
    if (docs.empty()) throw InvalidArgument("corpus " + config.paths.corpus.string() + " is empty");
    return docs;
  });
  in.specs = in_stage("corpus", [&] { return load_label_specs(config.paths.labels); });
  in.store = in_stage("embed-store", [&] {
    for (const auto& p : {config.paths.doc_vectors, config.paths.word_vectors, config.paths.sem_vectors}) {
      if (!fs::exists(p)) throw IoError("embedding file " + p.string() + " does not exist");
    }
    return load_store(config.paths.doc_vectors, config.paths.word_vectors, config.paths.sem_vectors)
        .bind(in.docs);
  });
  return in;
}

Stage1Result run_stage1(const PipelineConfig& config) {
  const std::string started = timestamp_utc();
  const PipelineInputs in = load_inputs(config);
  Stage1Result out;
  out.run_dir = in_stage("output", [&] {
    return prepare_run_dir(config.paths.output_dir / ("stage1-" + config_hash(config)), config.overwrite);
  });
  Embedders embedders = in_stage("embed-store", [&] { return start_embedders(config); });

  out.labels = in_stage("retrieval", [&] {
    return dedup_assign(retrieve_all(in.store, in.specs, config.k, embedders.query.get()));
  });
  out.model = in_stage("classifier", [&] { return train(in.store, out.labels, in.specs.size(), config.train); });
  out.metrics = in_stage("eval", [&] {
    return evaluate(in.docs, predict(out.model, in.store, doc_ids(in.docs)), in.specs.size());
  });

  in_stage("output", [&] {
    write_text(out.run_dir / "config.json", result_fields(config).dump(2) + "\n");
    write_pseudo_labels(out.run_dir / "stage1_pseudo_labels.jsonl", out.labels);
    save_model(out.run_dir / "stage1_model.wndr", out.model);
    if (out.metrics) {
      write_text(out.run_dir / "metrics.json", json{{"stage1", to_json(*out.metrics)}}.dump(2) + "\n");
    }
    write_text(out.run_dir / "run.json", run_manifest(config, started, "stage1").dump(2) + "\n");
  });
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  const std::string started = timestamp_utc();
  const PipelineInputs in = load_inputs(config);
  const std::size_t C = in.specs.size();
  const auto ids = doc_ids(in.docs);

  PipelineResult out;
  out.run_dir = in_stage("output", [&] { return prepare_run_dir(run_directory(config), config.overwrite); });
  in_stage("output", [&] { write_text(out.run_dir / "config.json", result_fields(config).dump(2) + "\n"); });
  Embedders embedders = in_stage("embed-store", [&] { return start_embedders(config); });
  const TokenizedCorpus corpus(in.docs);

  // Stage-II runs Stage-I retrieval as its first step.
  const ExpansionConfig ecfg{config.k, config.m, config.iterations, config.alpha};
  ExpansionOutcome expansion = in_stage("expansion", [&] {
    return run_expansion(in.store, corpus, in.specs, ecfg, embedders.query.get(), embedders.semantic.get());
  });
  out.stage1_labels = std::move(expansion.initial_labels);
  out.stage2_labels = std::move(expansion.pseudo_labels);
  out.specs = std::move(expansion.specs);
  out.expansion_log = std::move(expansion.log);
  spdlog::info("stage I: {} pseudo-labeled documents; stage II: {}", out.stage1_labels.size(),
               out.stage2_labels.size());

  out.stage1_model = in_stage("classifier", [&] { return train(in.store, out.stage1_labels, C, config.train); });
  out.stage2_model = in_stage("classifier", [&] { return train(in.store, out.stage2_labels, C, config.train); });
  out.self_training =
      in_stage("self-train", [&] { return self_train(out.stage2_model, in.store, ids, config.train); });
  out.predictions = in_stage("classifier", [&] { return predict(out.self_training.model, in.store, ids); });

  in_stage("eval", [&] {
    out.metrics.stage1 = evaluate(in.docs, predict(out.stage1_model, in.store, ids), C);
    out.metrics.stage2 = evaluate(in.docs, predict(out.stage2_model, in.store, ids), C);
    out.metrics.full = evaluate(in.docs, out.predictions, C);
  });

  in_stage("output", [&] {
    const fs::path& dir = out.run_dir;
    write_pseudo_labels(dir / "stage1_pseudo_labels.jsonl", out.stage1_labels);
    write_pseudo_labels(dir / "stage2_pseudo_labels.jsonl", out.stage2_labels);
    write_expansion_log(dir / "expansion_log.jsonl", out.expansion_log);
    save_label_specs(dir / "expanded_labels.jsonl", out.specs);
    save_model(dir / "stage1_model.wndr", out.stage1_model);
    save_model(dir / "stage2_model.wndr", out.stage2_model);
    save_model(dir / "model.wndr", out.self_training.model);
    write_self_train_report(dir / "self_train_report.jsonl", out.self_training.reports);
    write_predictions(dir / "predictions.jsonl", in.docs, out.predictions);
    if (out.metrics.full) {
      write_text(dir / "metrics.json", metrics_json(out.metrics).dump(2) + "\n");
      write_text(dir / "metrics.txt", metrics_text(out.metrics, out.specs));
    }
    json manifest = run_manifest(config, started, "pipeline");
    manifest["self_train_rounds"] = out.self_training.rounds;
    manifest["self_train_no_confident"] = out.self_training.no_confident_examples;
    manifest["self_train_degenerate"] = out.self_training.degenerate_labels;
    manifest["expansion_warnings"] = expansion.warnings;
    manifest["semantic_oov_dropped"] = expansion.dropped_semantic;
    write_text(dir / "run.json", manifest.dump(2) + "\n");
  });
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<SweepRow> sweep(const PipelineConfig& config, SweepParam param, const std::vector<double>& values,
                            bool parallel) {
  const auto run_one = [&](double value) {
    SweepRow row;
    row.value = value;
    PipelineConfig c = config;
    try {
      if (param == SweepParam::k) {
        if (value < 1 || value != static_cast<double>(static_cast<std::size_t>(value))) {
          throw ConfigError("k must be a positive integer");
        }
        c.k = static_cast<std::size_t>(value);
      } else {
        c.train.gamma = value;
      }
      const auto result = run_pipeline(c);
      row.ok = true;
      row.run_dir = result.run_dir;
      row.metrics = result.metrics;
    } catch (const std::exception& e) {
      row.error = e.what();
      spdlog::error("sweep value {}: {}", value, e.what());
    }
    return row;
  };

  std::vector<SweepRow> rows;
  if (parallel) {
    std::vector<std::future<SweepRow>> jobs;
    for (double v : values) jobs.push_back(std::async(std::launch::async, run_one, v));
    for (auto& job : jobs) rows.push_back(job.get());
  } else {
    for (double v : values) rows.push_back(run_one(v));
  }
  return rows;
}

std::string format_sweep(SweepParam param, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  const auto cell = [&](const std::optional<MetricsReport>& m, bool macro) {
    std::ostringstream c;
    if (m) {
      c << std::fixed << std::setprecision(4) << (macro ? m->macro_f1 : m->micro_f1);
    } else {
      c << "-";
    }
    return c.str();
  };
  out << std::left << std::setw(8) << (param == SweepParam::k ? "k" : "gamma") << std::right;
  for (const char* h : {"s1_micro", "s1_macro", "s2_micro", "s2_macro", "micro_f1", "macro_f1"}) {
    out << std::setw(10) << h;
  }
  out << "  status\n";
  for (const auto& row : rows) {
    std::ostringstream v;
    v << row.value;
    out << std::left << std::setw(8) << v.str() << std::right;
    out << std::setw(10) << cell(row.metrics.stage1, false) << std::setw(10) << cell(row.metrics.stage1, true)
        << std::setw(10) << cell(row.metrics.stage2, false) << std::setw(10) << cell(row.metrics.stage2, true)
        << std::setw(10) << cell(row.metrics.full, false) << std::setw(10) << cell(row.metrics.full, true);
    out << "  " << (row.ok ? "ok" : "error: " + row.error) << '\n';
  }
  return out.str();
}

json to_json(SweepParam param, const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& row : rows) {
    json r = {{"param", param == SweepParam::k ? "k" : "gamma"},
              {"value", row.value},
              {"ok", row.ok},
              {"run_dir", row.run_dir.string()},
              {"metrics", metrics_json(row.metrics)}};
    if (!row.ok) r["error"] = row.error;
    arr.push_back(std::move(r));
  }
  return arr;
}

}  // namespace wander
