#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wander/corpus.hpp"
#include "wander/vector_file.hpp"

namespace wander {

/// The three embedding tables. Document vectors and doc-space word vectors
/// live in the retrieval space (scored by dot product); semantic word vectors
/// live in a separate space scored by cosine. The spaces are never mixed.
struct EmbeddingStore {
  std::size_t dim = 0;
  VectorTable doc_vectors;
  VectorTable doc_word_vectors;
  VectorTable sem_word_vectors;

  /// Returns a copy whose doc_vectors hold exactly the corpus documents, in
  /// corpus order. Throws MissingDocVector for the first uncovered id.
  EmbeddingStore bind(const std::vector<Document>& corpus) const;
};

/// Checks that the three tables share one dimension; throws DimensionMismatch.
EmbeddingStore make_store(VectorTable doc, VectorTable word, VectorTable sem);

EmbeddingStore load_store(const std::filesystem::path& doc_path, const std::filesystem::path& word_path,
                          const std::filesystem::path& sem_path);

void write_store(const EmbeddingStore& store, const std::filesystem::path& doc_path,
                 const std::filesystem::path& word_path, const std::filesystem::path& sem_path);

/// Encodes arbitrary text into a vector. Used to plug in an exact encoder in
/// place of word-vector averaging.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::vector<float> embed(std::string_view text) = 0;
};

/// Talks to a child process over the line protocol: one {"text": ...} JSON
/// object per line on its stdin, one {"vector": [...]} per line back on its
/// stdout. The command runs under /bin/sh -c. Any protocol violation, early
/// exit or {"error": ...} reply raises EmbedderFailure.
class LineProtocolEmbedder final : public TextEmbedder {
 public:
  explicit LineProtocolEmbedder(const std::string& command);
  ~LineProtocolEmbedder() override;

  LineProtocolEmbedder(const LineProtocolEmbedder&) = delete;
  LineProtocolEmbedder& operator=(const LineProtocolEmbedder&) = delete;

  std::vector<float> embed(std::string_view text) override;

 private:
  struct Process;
  std::unique_ptr<Process> proc_;
};

/// Retrieval-space query vector. Without an external embedder this is the
/// unweighted mean of doc_word_vectors over the query's in-vocabulary token
/// occurrences; throws NoKnownTokens when there are none.
std::vector<double> embed_query(const EmbeddingStore& store, std::string_view query,
                                TextEmbedder* external = nullptr);

/// Semantic-space vector of a text: mean of sem_word_vectors over its
/// in-vocabulary tokens, or the external embedder's output.
std::vector<double> embed_semantic(const EmbeddingStore& store, std::string_view text,
                                   TextEmbedder* external = nullptr);

/// Cosine similarity computed in double. Throws ZeroNorm when either norm is
/// below 1e-12 and DimensionMismatch on unequal lengths.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const double> b);

double dot(std::span<const float> a, std::span<const double> b);

}  // namespace wander
