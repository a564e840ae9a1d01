#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wander/corpus.hpp"
#include "wander/embed_store.hpp"

namespace wander {

struct Hit {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const Hit&) const = default;
};

/// Retrieved set of one class: at most k hits, scores non-increasing.
struct RetrievalResult {
  int class_id = 0;
  std::vector<Hit> hits;
};

struct Assignment {
  int class_id = 0;
  double score = 0.0;

  bool operator==(const Assignment&) const = default;
};

/// document id -> (class, score). Ordered by id so iteration is deterministic.
struct PseudoLabelSet {
  std::map<std::string, Assignment> assignments;

  std::size_t size() const noexcept { return assignments.size(); }
  bool empty() const noexcept { return assignments.empty(); }
  bool operator==(const PseudoLabelSet&) const = default;
};

/// Exact top-k by dot product over every document vector in the store.
/// Returns min(k, #docs) hits ordered by score descending, ties by ascending
/// document id. Throws DimensionMismatch and InvalidArgument (k < 1).
std::vector<Hit> top_k(const EmbeddingStore& store, std::span<const double> query, std::size_t k);

/// One RetrievalResult per label spec, in class-id order. Query embedding
/// failures are rethrown as ClassQueryError naming the class.
std::vector<RetrievalResult> retrieve_all(const EmbeddingStore& store, const std::vector<LabelSpec>& specs,
                                          std::size_t k, TextEmbedder* external = nullptr);

/// Union of all hits; a document hit by several classes goes to the class
/// that scored it highest, ties to the lowest class id.
PseudoLabelSet dedup_assign(const std::vector<RetrievalResult>& results);

/// JSON Lines {"id", "class_id", "score"} ordered by id.
void write_pseudo_labels(const std::filesystem::path& path, const PseudoLabelSet& labels);
PseudoLabelSet read_pseudo_labels(const std::filesystem::path& path);

}  // namespace wander
