#include "wander/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "wander/errors.hpp"
#include "wander/text.hpp"

namespace wander {

namespace {

struct RankedToken {
  std::string token;
  double score;
};

// Score desc, token asc.
std::vector<RankedToken> rank_by_score(const TokenScores& scores) {
  std::vector<RankedToken> ranked;
  ranked.reserve(scores.size());
  for (const auto& [token, score] : scores) ranked.push_back({token, score});
  std::sort(ranked.begin(), ranked.end(), [](const RankedToken& a, const RankedToken& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.token < b.token;
  });
  return ranked;
}

}  // namespace

ClassTermStats build_class_stats(int class_id, const std::vector<const std::vector<std::string>*>& docs) {
  ClassTermStats stats;
  stats.class_id = class_id;
  stats.num_docs = docs.size();
  for (const auto* tokens : docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& token : *tokens) {
      ++stats.tf[token];
      if (seen.insert(token).second) ++stats.cnt[token];
    }
    stats.total_tokens += static_cast<long>(tokens->size());
  }
  return stats;
}

LocalCorpusStats build_local_stats(const TokenizedCorpus& corpus, const PseudoLabelSet& labels,
                                   std::size_t num_classes) {
  std::vector<std::vector<const std::vector<std::string>*>> grouped(num_classes);
  for (const auto& [id, assignment] : labels.assignments) {
    if (assignment.class_id < 0 || static_cast<std::size_t>(assignment.class_id) >= num_classes) {
      throw InvalidArgument("pseudo-label class " + std::to_string(assignment.class_id) + " out of range");
    }
    grouped[static_cast<std::size_t>(assignment.class_id)].push_back(&corpus.tokens(id));
  }

  LocalCorpusStats local;
  long total = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    local.classes.push_back(build_class_stats(static_cast<int>(c), grouped[c]));
    for (const auto& [token, n] : local.classes.back().tf) local.global_tf[token] += n;
    total += local.classes.back().total_tokens;
  }
  local.average_tokens = num_classes ? static_cast<double>(total) / static_cast<double>(num_classes) : 0.0;
  return local;
}

TokenScores local_score(const ClassTermStats& stats, const TokenCounts& global_tf, double average_tokens,
                        double alpha) {
  if (!(average_tokens > 0.0)) throw InvalidArgument("average tokens per class must be positive");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  TokenScores scores;
  scores.reserve(stats.tf.size());
  for (const auto& [token, tf] : stats.tf) {
    if (tf <= 0) continue;
    const auto g = global_tf.find(token);
    if (g == global_tf.end() || g->second < tf) throw InconsistentCounts(token);
    const auto cnt = stats.cnt.find(token);
    const double docs = cnt == stats.cnt.end() ? 0.0 : static_cast<double>(cnt->second);
    scores[token] = std::pow(static_cast<double>(tf), alpha) *
                    std::log1p(average_tokens / static_cast<double>(g->second)) * docs;
  }
  return scores;
}

GlobalScores global_score(const EmbeddingStore& store, const std::vector<std::string>& candidates,
                          std::string_view label_name, TextEmbedder* semantic) {
  const auto label_vec = embed_semantic(store, label_name, semantic);
  GlobalScores out;
  for (const auto& token : candidates) {
    const auto row = store.sem_word_vectors.find(token);
    if (!row) {
      ++out.dropped;
      continue;
    }
    out.scores[token] = cosine(*row, label_vec);
  }
  return out;
}

std::vector<std::string> candidate_pool(const TokenScores& local, std::size_t m) {
  auto ranked = rank_by_score(local);
  if (ranked.size() > m) ranked.resize(m);
  std::vector<std::string> pool;
  pool.reserve(ranked.size());
  for (auto& r : ranked) pool.push_back(std::move(r.token));
  return pool;
}

std::vector<KeywordCandidate> rank_candidates(const TokenScores& local, const TokenScores& global,
                                              const LabelSpec& spec, std::size_t m) {
  const auto query = query_tokens(spec);
  const std::set<std::string> excluded(query.begin(), query.end());

  TokenScores pool_local;
  TokenScores pool_global;
  for (const auto& token : candidate_pool(local, m)) {
    if (excluded.contains(token)) continue;
    const auto g = global.find(token);
    if (g == global.end()) continue;
    pool_local[token] = local.at(token);
    pool_global[token] = g->second;
  }

  std::unordered_map<std::string, KeywordCandidate> by_token;
  const auto by_local = rank_by_score(pool_local);
  for (std::size_t i = 0; i < by_local.size(); ++i) {
    auto& c = by_token[by_local[i].token];
    c.token = by_local[i].token;
    c.local_score = by_local[i].score;
    c.rank_local = static_cast<int>(i) + 1;
  }
  const auto by_global = rank_by_score(pool_global);
  for (std::size_t i = 0; i < by_global.size(); ++i) {
    auto& c = by_token[by_global[i].token];
    c.global_score = by_global[i].score;
    c.rank_global = static_cast<int>(i) + 1;
  }

  std::vector<KeywordCandidate> ranked;
  ranked.reserve(by_token.size());
  for (auto& [token, c] : by_token) {
    c.fused = 1.0 / c.rank_local + 1.0 / c.rank_global;
    ranked.push_back(std::move(c));
  }
  std::sort(ranked.begin(), ranked.end(), [](const KeywordCandidate& a, const KeywordCandidate& b) {
    if (a.fused != b.fused) return a.fused > b.fused;
    if (a.local_score != b.local_score) return a.local_score > b.local_score;
    return a.token < b.token;
  });
  return ranked;
}

KeywordCandidate select_expansion(const TokenScores& local, const TokenScores& global, const LabelSpec& spec,
                                  std::size_t m) {
  auto ranked = rank_candidates(local, global, spec, m);
  if (ranked.empty()) throw EmptyCandidatePool(spec.class_id);
  return std::move(ranked.front());
}

ExpansionOutcome run_expansion(const EmbeddingStore& store, const TokenizedCorpus& corpus,
                               std::vector<LabelSpec> specs, const ExpansionConfig& config,
                               TextEmbedder* query_embedder, TextEmbedder* semantic_embedder) {
  if (config.iterations < 0) throw InvalidArgument("iterations must be >= 0");
  if (config.k < 1) throw InvalidArgument("k must be >= 1");

  ExpansionOutcome outcome;
  const std::size_t num_classes = specs.size();
  PseudoLabelSet current = dedup_assign(retrieve_all(store, specs, config.k, query_embedder));
  outcome.initial_labels = current;

  for (int iter = 1; iter <= config.iterations; ++iter) {
    if (iter > 1) current = dedup_assign(retrieve_all(store, specs, config.k, query_embedder));
    const LocalCorpusStats local = build_local_stats(corpus, current, num_classes);

    for (auto& spec : specs) {
      const auto& stats = local.classes[static_cast<std::size_t>(spec.class_id)];
      try {
        if (stats.total_tokens == 0) throw EmptyCandidatePool(spec.class_id);
        const auto local_scores = local_score(stats, local.global_tf, local.average_tokens, config.alpha);

        const auto query = query_tokens(spec);
        std::vector<std::string> pool;
        for (auto& token : candidate_pool(local_scores, config.m)) {
          if (std::find(query.begin(), query.end(), token) == query.end()) pool.push_back(std::move(token));
        }
        const auto global = global_score(store, pool, spec.name, semantic_embedder);
        outcome.dropped_semantic += global.dropped;

        const auto pick = select_expansion(local_scores, global.scores, spec, config.m);
        add_expansion(spec, pick.token);
        outcome.log.push_back({iter, spec.class_id, pick.token, pick.local_score, pick.global_score, pick.fused});
        spdlog::debug("iter {} class {}: +\"{}\" (L={:.4f} G={:.4f} fused={:.4f})", iter, spec.class_id,
                      pick.token, pick.local_score, pick.global_score, pick.fused);
      } catch (const NoKnownTokens& e) {
        throw ClassQueryError(spec.class_id, e);
      } catch (const EmptyCandidatePool& e) {
        outcome.warnings.push_back("iter " + std::to_string(iter) + ": " + e.what());
        spdlog::warn("iter {}: {}; no expansion this round", iter, e.what());
      }
    }
  }

  outcome.pseudo_labels =
      config.iterations == 0 ? current : dedup_assign(retrieve_all(store, specs, config.k, query_embedder));
  if (outcome.dropped_semantic > 0) {
    spdlog::warn("{} expansion candidates had no semantic vector and were dropped", outcome.dropped_semantic);
  }
  outcome.specs = std::move(specs);
  return outcome;
}

void write_expansion_log(const std::filesystem::path& path, const std::vector<ExpansionLogEntry>& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : log) {
    out << nlohmann::json{{"iter", e.iter},   {"class_id", e.class_id}, {"token", e.token},
                          {"local", e.local}, {"global", e.global},     {"fused", e.fused}}
               .dump()
        << '\n';
  }
}

}  // namespace wander
