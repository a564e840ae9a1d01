#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wander/corpus.hpp"
#include "wander/embed_store.hpp"

namespace wander::synthetic {

/// Gaussian-cluster corpus with a planted vocabulary.
///
/// Document vectors of class c are centroid_c + doc_noise * N(0, I), with
/// centroid_c = centroid_norm * e_c. Each class owns `signature_tokens`
/// words; the first one is the class's label name. Signature word vectors
/// sit near their class centroid, except the label word, which is pulled
/// toward the next class's centroid by `label_confusion` so that retrieval
/// with the bare name is noisy. Semantic vectors cluster per class on axes
/// disjoint from the retrieval centroids.
struct Options {
  std::size_t num_classes = 4;
  std::size_t dim = 32;
  std::size_t docs_per_class = 250;
  std::size_t signature_tokens = 10;
  std::size_t generic_tokens = 300;
  std::size_t doc_length = 60;
  double centroid_norm = 4.0;
  double doc_noise = 1.0;
  double word_noise = 0.5;
  double label_confusion = 0.7;
  double signature_rate = 0.2;  // per-token chance of an own-class signature word
  double cross_rate = 0.05;     // per-token chance of another class's signature word
  std::uint64_t seed = 7;
};

struct Dataset {
  std::vector<Document> docs;
  std::vector<LabelSpec> specs;
  EmbeddingStore store;
  std::vector<std::vector<std::string>> signatures;  // per class, label word first
  std::vector<std::vector<double>> centroids;
};

struct Files {
  std::filesystem::path corpus;
  std::filesystem::path labels;
  std::filesystem::path doc_vectors;
  std::filesystem::path word_vectors;
  std::filesystem::path sem_vectors;
};

Dataset generate(const Options& options);

/// Writes corpus.jsonl, labels.jsonl, docs.wndr, words.wndr and sem.wndr
/// into `dir` (created if needed).
Files write(const Dataset& data, const std::filesystem::path& dir);

}  // namespace wander::synthetic
