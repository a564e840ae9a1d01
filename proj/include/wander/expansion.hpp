#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wander/corpus.hpp"
#include "wander/embed_store.hpp"
#include "wander/retrieval.hpp"

namespace wander {

using TokenCounts = std::unordered_map<std::string, long>;
using TokenScores = std::unordered_map<std::string, double>;

/// Term statistics of the documents pseudo-labeled with one class.
///   tf[w]  - occurrences of w in those documents
///   cnt[w] - number of those documents containing w
struct ClassTermStats {
  int class_id = 0;
  TokenCounts tf;
  TokenCounts cnt;
  long total_tokens = 0;
  std::size_t num_docs = 0;
};

/// Counts over the retrieved (local) corpus: one ClassTermStats per class,
/// corpus-wide token counts over the union of retrieved documents, and the
/// average number of tokens per class.
struct LocalCorpusStats {
  std::vector<ClassTermStats> classes;
  TokenCounts global_tf;
  double average_tokens = 0.0;
};

ClassTermStats build_class_stats(int class_id, const std::vector<const std::vector<std::string>*>& docs);

/// Groups the pseudo-labeled documents by class and counts their tokens.
/// A document contributes to exactly one class.
LocalCorpusStats build_local_stats(const TokenizedCorpus& corpus, const PseudoLabelSet& labels,
                                   std::size_t num_classes);

/// Class-based TF-IDF indicativeness of every token seen in the class:
///
///   L(w, c) = tf(w, c)^alpha * ln(1 + A / tf(w)) * cnt(w, c)
///
/// where tf(w) is the token's count over the whole local corpus and A the
/// average token count per class. Throws InconsistentCounts when tf(w) is
/// missing or below tf(w, c), InvalidArgument for A <= 0 or alpha <= 0.
TokenScores local_score(const ClassTermStats& stats, const TokenCounts& global_tf, double average_tokens,
                        double alpha);

struct GlobalScores {
  TokenScores scores;
  std::size_t dropped = 0;  // candidates without a semantic vector
};

/// Cosine between each candidate's semantic vector and the label name's
/// semantic embedding. Candidates missing from sem_word_vectors are dropped
/// and counted. Throws NoKnownTokens when the label name cannot be embedded.
GlobalScores global_score(const EmbeddingStore& store, const std::vector<std::string>& candidates,
                          std::string_view label_name, TextEmbedder* semantic = nullptr);

struct KeywordCandidate {
  std::string token;
  double local_score = 0.0;
  double global_score = 0.0;
  int rank_local = 0;
  int rank_global = 0;
  double fused = 0.0;  // 1/rank_local + 1/rank_global
};

/// The m tokens with the highest local score (ties by token), before any
/// exclusion.
std::vector<std::string> candidate_pool(const TokenScores& local, std::size_t m);

/// Candidate pool with the current query's tokens and globally unscored
/// tokens removed, each ranked by both scores and fused by reciprocal rank.
/// Sorted best first: fused desc, then local desc, then token asc.
std::vector<KeywordCandidate> rank_candidates(const TokenScores& local, const TokenScores& global,
                                              const LabelSpec& spec, std::size_t m);

/// Best fused candidate. Throws EmptyCandidatePool when nothing survives
/// exclusion.
KeywordCandidate select_expansion(const TokenScores& local, const TokenScores& global, const LabelSpec& spec,
                                  std::size_t m);

struct ExpansionConfig {
  std::size_t k = 100;
  std::size_t m = 100;
  int iterations = 5;
  double alpha = 1.0;
};

struct ExpansionLogEntry {
  int iter = 0;
  int class_id = 0;
  std::string token;
  double local = 0.0;
  double global = 0.0;
  double fused = 0.0;

  bool operator==(const ExpansionLogEntry&) const = default;
};

struct ExpansionOutcome {
  std::vector<LabelSpec> specs;
  PseudoLabelSet initial_labels;  // retrieval with the unexpanded names
  PseudoLabelSet pseudo_labels;   // retrieval with the final queries
  std::vector<ExpansionLogEntry> log;
  std::vector<std::string> warnings;
  std::size_t dropped_semantic = 0;
};

/// Iterative label-name expansion. Each iteration retrieves with the current
/// queries, rebuilds term statistics from the retrieved documents only, and
/// appends one word per class. A class whose candidate pool is empty skips
/// the round with a warning. After the last iteration the final queries are
/// retrieved once more to produce the returned pseudo-labels.
ExpansionOutcome run_expansion(const EmbeddingStore& store, const TokenizedCorpus& corpus,
                               std::vector<LabelSpec> specs, const ExpansionConfig& config,
                               TextEmbedder* query_embedder = nullptr, TextEmbedder* semantic_embedder = nullptr);

void write_expansion_log(const std::filesystem::path& path, const std::vector<ExpansionLogEntry>& log);

}  // namespace wander
