#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wander/embed_store.hpp"
#include "wander/retrieval.hpp"

namespace wander {

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 30;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  double gamma = 0.8;  // self-training confidence threshold
  int max_st_rounds = 10;
  double stop_frac = 0.01;
  std::uint64_t seed = 42;
};

/// Throws ConfigError when a field is out of range.
void validate(const TrainConfig& cfg);

/// Multinomial logistic regression over document embeddings:
/// p(c | x) = softmax(W x + b)_c. Parameters are kept in double precision.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  /// All-zero weights and bias (uniform predictions).
  LinearClassifier(std::size_t num_classes, std::size_t dim);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> weights() noexcept { return weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> weight_row(std::size_t c) noexcept { return {weights_.data() + c * dim_, dim_}; }
  std::span<const double> weight_row(std::size_t c) const noexcept {
    return {weights_.data() + c * dim_, dim_};
  }
  std::span<double> bias() noexcept { return bias_; }
  std::span<const double> bias() const noexcept { return bias_; }

  std::vector<double> logits(std::span<const float> x) const;
  std::vector<double> probabilities(std::span<const float> x) const;

  bool operator==(const LinearClassifier&) const = default;

 private:
  std::size_t num_classes_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> weights_;  // row-major C x dim
  std::vector<double> bias_;
};

/// Numerically stable softmax (max-shifted).
std::vector<double> softmax(std::span<const double> logits);

struct Prediction {
  int class_id = 0;
  double confidence = 0.0;  // max softmax probability

  bool operator==(const Prediction&) const = default;
};

/// Argmax class (ties to the lowest id) and its probability.
Prediction predict_one(const LinearClassifier& model, std::span<const float> x);

/// Throws MissingDocVector for an id without a document vector.
std::vector<Prediction> predict(const LinearClassifier& model, const EmbeddingStore& store,
                                const std::vector<std::string>& ids);

struct Objective {
  double loss = 0.0;
  std::vector<double> grad_weights;  // C x dim
  std::vector<double> grad_bias;     // C
};

/// Mean cross-entropy over the examples plus l2 * ||W||^2 (bias not
/// penalized), with its analytic gradient.
Objective cross_entropy_objective(const LinearClassifier& model, const std::vector<std::span<const float>>& x,
                                  const std::vector<int>& y, double l2);

/// Mini-batch gradient descent from zero initialization. Examples are taken
/// in document-id order and reshuffled every epoch with a generator seeded by
/// cfg.seed, so the result is a deterministic function of the inputs.
/// Throws DegenerateLabels (fewer than two classes present, or empty),
/// MissingDocVector and InvalidArgument (class id out of range).
LinearClassifier train(const EmbeddingStore& store, const PseudoLabelSet& labels, std::size_t num_classes,
                       const TrainConfig& cfg);

struct SelfTrainRound {
  int round = 0;
  std::size_t n_confident = 0;
  double change_frac = 0.0;

  bool operator==(const SelfTrainRound&) const = default;
};

struct SelfTrainResult {
  LinearClassifier model;
  int rounds = 0;
  std::vector<double> history;  // change fraction per completed round
  std::vector<SelfTrainRound> reports;
  bool no_confident_examples = false;
  bool degenerate_labels = false;  // confident set covered a single class
};

/// Self-training over every corpus document. Each round keeps documents
/// whose confidence exceeds cfg.gamma, labels them with the current argmax,
/// retrains from scratch on them, and measures the fraction of documents
/// whose prediction changed. Stops when that fraction drops below
/// cfg.stop_frac or after cfg.max_st_rounds rounds. If a round has no
/// confident document (or only one class among them), the current model is
/// returned with the matching flag set.
SelfTrainResult self_train(const LinearClassifier& model, const EmbeddingStore& store,
                           const std::vector<std::string>& corpus_ids, const TrainConfig& cfg);

/// Model file in WNDR format: rows "w:<class>" hold the weights, row "b"
/// holds the bias in its first C components (zero padded). Requires C <= dim.
void save_model(const std::filesystem::path& path, const LinearClassifier& model);
std::string encode_model(const LinearClassifier& model);
LinearClassifier load_model(const std::filesystem::path& path);

void write_self_train_report(const std::filesystem::path& path, const std::vector<SelfTrainRound>& rounds);

}  // namespace wander
