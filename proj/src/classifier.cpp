#include "wander/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "wander/errors.hpp"
#include "wander/rng.hpp"
#include "wander/vector_file.hpp"

namespace wander {

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(cfg.l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (cfg.max_st_rounds < 0) throw ConfigError("max_st_rounds must be >= 0");
  if (!(cfg.stop_frac > 0.0 && cfg.stop_frac < 1.0)) throw ConfigError("stop_frac must lie in (0, 1)");
}

LinearClassifier::LinearClassifier(std::size_t num_classes, std::size_t dim)
    : num_classes_(num_classes), dim_(dim), weights_(num_classes * dim, 0.0), bias_(num_classes, 0.0) {}

std::vector<double> LinearClassifier::logits(std::span<const float> x) const {
  if (x.size() != dim_) throw DimensionMismatch(dim_, x.size());
  std::vector<double> z(bias_);
  for (std::size_t c = 0; c < num_classes_; ++c) {
    const double* w = weights_.data() + c * dim_;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += w[i] * static_cast<double>(x[i]);
    z[c] += s;
  }
  return z;
}

std::vector<double> LinearClassifier::probabilities(std::span<const float> x) const { return softmax(logits(x)); }

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

Prediction predict_one(const LinearClassifier& model, std::span<const float> x) {
  const auto p = model.probabilities(x);
  // max_element returns the first maximum, i.e. the lowest class id on ties.
  const auto best = std::max_element(p.begin(), p.end());
  return {static_cast<int>(best - p.begin()), *best};
}

std::vector<Prediction> predict(const LinearClassifier& model, const EmbeddingStore& store,
                                const std::vector<std::string>& ids) {
  std::vector<Prediction> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto row = store.doc_vectors.find(id);
    if (!row) throw MissingDocVector(id);
    out.push_back(predict_one(model, *row));
  }
  return out;
}

Objective cross_entropy_objective(const LinearClassifier& model, const std::vector<std::span<const float>>& x,
                                  const std::vector<int>& y, double l2) {
  const std::size_t C = model.num_classes();
  const std::size_t D = model.dim();
  Objective obj;
  obj.grad_weights.assign(C * D, 0.0);
  obj.grad_bias.assign(C, 0.0);
  if (x.empty()) return obj;

  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const auto z = model.logits(x[n]);
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - top);
    const double log_norm = top + std::log(sum);
    const auto label = static_cast<std::size_t>(y[n]);
    obj.loss += (log_norm - z[label]) * inv_n;

    for (std::size_t c = 0; c < C; ++c) {
      const double delta = (std::exp(z[c] - log_norm) - (c == label ? 1.0 : 0.0)) * inv_n;
      obj.grad_bias[c] += delta;
      double* g = obj.grad_weights.data() + c * D;
      for (std::size_t i = 0; i < D; ++i) g[i] += delta * static_cast<double>(x[n][i]);
    }
  }

  if (l2 > 0.0) {
    const auto w = model.weights();
    double sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sq += w[i] * w[i];
      obj.grad_weights[i] += 2.0 * l2 * w[i];
    }
    obj.loss += l2 * sq;
  }
  return obj;
}

LinearClassifier train(const EmbeddingStore& store, const PseudoLabelSet& labels, std::size_t num_classes,
                       const TrainConfig& cfg) {
  validate(cfg);
  if (labels.empty()) throw DegenerateLabels("no labeled examples");

  std::vector<std::span<const float>> features;
  std::vector<int> targets;
  std::set<int> present;
  features.reserve(labels.size());
  targets.reserve(labels.size());
  for (const auto& [id, a] : labels.assignments) {
    if (a.class_id < 0 || static_cast<std::size_t>(a.class_id) >= num_classes) {
      throw InvalidArgument("label class " + std::to_string(a.class_id) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    const auto row = store.doc_vectors.find(id);
    if (!row) throw MissingDocVector(id);
    features.push_back(*row);
    targets.push_back(a.class_id);
    present.insert(a.class_id);
  }
  if (present.size() < 2) throw DegenerateLabels("labels cover a single class");

  LinearClassifier model(num_classes, store.dim);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(features.size());
  std::vector<std::span<const float>> batch_x;
  std::vector<int> batch_y;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch_x.push_back(features[order[i]]);
        batch_y.push_back(targets[order[i]]);
      }
      const auto obj = cross_entropy_objective(model, batch_x, batch_y, cfg.l2);
      auto w = model.weights();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * obj.grad_weights[i];
      auto b = model.bias();
      for (std::size_t c = 0; c < b.size(); ++c) b[c] -= cfg.learning_rate * obj.grad_bias[c];
    }
  }
  return model;
}

SelfTrainResult self_train(const LinearClassifier& model, const EmbeddingStore& store,
                           const std::vector<std::string>& corpus_ids, const TrainConfig& cfg) {
  validate(cfg);
  SelfTrainResult result;
  result.model = model;
  if (corpus_ids.empty()) throw InvalidArgument("self-training needs a non-empty corpus");

  auto previous = predict(result.model, store, corpus_ids);
  for (int round = 1; round <= cfg.max_st_rounds; ++round) {
    PseudoLabelSet confident;
    for (std::size_t i = 0; i < corpus_ids.size(); ++i) {
      if (previous[i].confidence > cfg.gamma) {
        confident.assignments.emplace(corpus_ids[i], Assignment{previous[i].class_id, previous[i].confidence});
      }
    }
    if (confident.empty()) {
      spdlog::warn("self-training round {}: no prediction above gamma={}; keeping the current model", round,
                   cfg.gamma);
      result.no_confident_examples = true;
      break;
    }

    LinearClassifier next;
    try {
      next = train(store, confident, model.num_classes(), cfg);
    } catch (const DegenerateLabels&) {
      spdlog::warn("self-training round {}: confident predictions cover one class; keeping the current model",
                   round);
      result.degenerate_labels = true;
      break;
    }

    const auto current = predict(next, store, corpus_ids);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < current.size(); ++i) changed += current[i].class_id != previous[i].class_id;
    const double frac = static_cast<double>(changed) / static_cast<double>(corpus_ids.size());

    result.model = std::move(next);
    result.rounds = round;
    result.history.push_back(frac);
    result.reports.push_back({round, confident.size(), frac});
    previous = current;
    spdlog::info("self-training round {}: {} confident, {:.4f} changed", round, confident.size(), frac);
    if (frac < cfg.stop_frac) break;
  }
  return result;
}

namespace {

VectorTable model_table(const LinearClassifier& model) {
  const std::size_t C = model.num_classes();
  const std::size_t D = model.dim();
  if (C > D) throw InvalidArgument("model file needs num_classes <= dim");
  VectorTable table(D);
  std::vector<float> row(D);
  for (std::size_t c = 0; c < C; ++c) {
    const auto w = model.weight_row(c);
    std::transform(w.begin(), w.end(), row.begin(), [](double v) { return static_cast<float>(v); });
    table.add("w:" + std::to_string(c), row);
  }
  std::fill(row.begin(), row.end(), 0.0f);
  for (std::size_t c = 0; c < C; ++c) row[c] = static_cast<float>(model.bias()[c]);
  table.add("b", row);
  return table;
}

}  // namespace

std::string encode_model(const LinearClassifier& model) { return encode_vector_table(model_table(model)); }

void save_model(const std::filesystem::path& path, const LinearClassifier& model) {
  write_vector_file(path, model_table(model));
}

LinearClassifier load_model(const std::filesystem::path& path) {
  const auto table = read_vector_file(path);
  std::size_t C = 0;
  while (table.contains("w:" + std::to_string(C))) ++C;
  if (C == 0 || !table.contains("b") || table.size() != C + 1) {
    throw CorruptHeader("model file must hold rows w:0..w:C-1 and b");
  }
  LinearClassifier model(C, table.dim());
  for (std::size_t c = 0; c < C; ++c) {
    const auto src = *table.find("w:" + std::to_string(c));
    std::copy(src.begin(), src.end(), model.weight_row(c).begin());
  }
  const auto b = *table.find("b");
  std::copy(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(C), model.bias().begin());
  return model;
}

void write_self_train_report(const std::filesystem::path& path, const std::vector<SelfTrainRound>& rounds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : rounds) {
    out << nlohmann::json{{"round", r.round}, {"n_confident", r.n_confident}, {"change_frac", r.change_frac}}
               .dump()
        << '\n';
  }
}

}  // namespace wander
