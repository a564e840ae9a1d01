#include "wander/retrieval.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "wander/errors.hpp"

namespace wander {

std::vector<Hit> top_k(const EmbeddingStore& store, std::span<const double> query, std::size_t k) {
  if (k < 1) throw InvalidArgument("top_k requires k >= 1");
  if (query.size() != store.dim) throw DimensionMismatch(store.dim, query.size());

  const VectorTable& docs = store.doc_vectors;
  struct Scored {
    double score;
    std::size_t row;
  };
  std::vector<Scored> scored(docs.size());
  for (std::size_t r = 0; r < docs.size(); ++r) scored[r] = {dot(docs.row(r), query), r};

  const auto before = [&docs](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return docs.key(a.row) < docs.key(b.row);
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), before);

  std::vector<Hit> hits;
  hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) hits.push_back({docs.key(scored[i].row), scored[i].score});
  return hits;
}

std::vector<RetrievalResult> retrieve_all(const EmbeddingStore& store, const std::vector<LabelSpec>& specs,
                                          std::size_t k, TextEmbedder* external) {
  std::vector<RetrievalResult> results;
  results.reserve(specs.size());
  for (const auto& spec : specs) {
    std::vector<double> query;
    try {
      query = embed_query(store, query_text(spec), external);
    } catch (const ClassQueryError&) {
      throw;
    } catch (const Error& e) {
      throw ClassQueryError(spec.class_id, e);
    }
    results.push_back({spec.class_id, top_k(store, query, k)});
  }
  return results;
}

PseudoLabelSet dedup_assign(const std::vector<RetrievalResult>& results) {
  PseudoLabelSet out;
  for (const auto& result : results) {
    for (const auto& hit : result.hits) {
      const Assignment candidate{result.class_id, hit.score};
      auto [it, inserted] = out.assignments.try_emplace(hit.doc_id, candidate);
      if (inserted) continue;
      Assignment& held = it->second;
      if (candidate.score > held.score ||
          (candidate.score == held.score && candidate.class_id < held.class_id)) {
        held = candidate;
      }
    }
  }
  return out;
}

void write_pseudo_labels(const std::filesystem::path& path, const PseudoLabelSet& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [id, a] : labels.assignments) {
    out << nlohmann::json{{"id", id}, {"class_id", a.class_id}, {"score", a.score}}.dump() << '\n';
  }
}

PseudoLabelSet read_pseudo_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  PseudoLabelSet labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto id = rec.at("id").get<std::string>();
      const Assignment a{rec.at("class_id").get<int>(), rec.value("score", 0.0)};
      if (!labels.assignments.emplace(id, a).second) throw DuplicateId(id);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return labels;
}

}  // namespace wander
