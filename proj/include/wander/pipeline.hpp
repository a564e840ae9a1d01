#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wander/classifier.hpp"
#include "wander/corpus.hpp"
#include "wander/errors.hpp"
#include "wander/eval.hpp"
#include "wander/expansion.hpp"
#include "wander/retrieval.hpp"

namespace wander {

struct PipelinePaths {
  std::filesystem::path corpus;
  std::filesystem::path labels;
  std::filesystem::path doc_vectors;
  std::filesystem::path word_vectors;
  std::filesystem::path sem_vectors;
  std::filesystem::path output_dir = "runs";
};

/// Every tunable of a run. Defaults: k = m = 100, gamma = 0.8, five
/// expansion iterations, alpha = 1.
struct PipelineConfig {
  PipelinePaths paths;
  std::size_t k = 100;
  std::size_t m = 100;
  double alpha = 1.0;
  int iterations = 5;
  TrainConfig train;  // carries gamma and the seed
  std::optional<std::string> external_embedder;
  std::optional<std::string> semantic_embedder;
  bool deterministic = false;  // omit timestamps from run.json
  bool overwrite = false;      // allow reusing an existing run directory
};

/// Throws ConfigError on unknown keys or wrong types. Relative paths are
/// resolved against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);
void validate(const PipelineConfig& config);

/// 16 hex digits of FNV-1a over the canonical JSON of the result-affecting
/// fields (output_dir, deterministic and overwrite excluded).
std::string config_hash(const PipelineConfig& config);
std::filesystem::path run_directory(const PipelineConfig& config);

/// A failure tagged with the stage it happened in.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const Error& cause)
      : Error(cause.kind(), cause.category(), stage + ": " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }
  nlohmann::json to_json() const {
    return {{"error", {{"stage", stage_}, {"kind", kind()}, {"message", what()}}}};
  }

 private:
  std::string stage_;
};

/// Everything loaded and validated before a run starts.
struct PipelineInputs {
  std::vector<Document> docs;
  std::vector<LabelSpec> specs;
  EmbeddingStore store;  // bound to docs
};

PipelineInputs load_inputs(const PipelineConfig& config);

struct StageMetrics {
  std::optional<MetricsReport> stage1;
  std::optional<MetricsReport> stage2;
  std::optional<MetricsReport> full;
};

struct PipelineResult {
  std::filesystem::path run_dir;
  std::vector<LabelSpec> specs;
  PseudoLabelSet stage1_labels;
  PseudoLabelSet stage2_labels;
  std::vector<ExpansionLogEntry> expansion_log;
  LinearClassifier stage1_model;
  LinearClassifier stage2_model;
  SelfTrainResult self_training;
  std::vector<Prediction> predictions;  // final model, corpus order
  StageMetrics metrics;
};

/// Stage-I retrieval, Stage-II expansion, classifier training and
/// self-training, writing every artifact under run_directory(config).
/// Failures are rethrown as PipelineError.
PipelineResult run_pipeline(const PipelineConfig& config);

struct Stage1Result {
  std::filesystem::path run_dir;
  PseudoLabelSet labels;
  LinearClassifier model;
  std::optional<MetricsReport> metrics;
};

/// Retrieval with the bare label names and one classifier trained on it.
Stage1Result run_stage1(const PipelineConfig& config);

enum class SweepParam { k, gamma };

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  std::filesystem::path run_dir;
  StageMetrics metrics;
};

/// One full pipeline run per value with everything else fixed. A failing
/// value is recorded in its row and the sweep moves on.
std::vector<SweepRow> sweep(const PipelineConfig& config, SweepParam param, const std::vector<double>& values,
                            bool parallel = false);

std::string format_sweep(SweepParam param, const std::vector<SweepRow>& rows);
nlohmann::json to_json(SweepParam param, const std::vector<SweepRow>& rows);

}  // namespace wander
