#include "wander/synthetic.hpp"

#include <cstdio>
#include <set>

#include "wander/errors.hpp"
#include "wander/rng.hpp"
#include "wander/text.hpp"

namespace wander::synthetic {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u"};

// Distinct three-syllable pseudo-words that survive tokenization unchanged.
std::vector<std::string> make_words(std::size_t count, Rng& rng) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  while (words.size() < count) {
    std::string w;
    for (int s = 0; s < 3; ++s) {
      w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
    }
    if (stopwords().contains(w) || !seen.insert(w).second) continue;
    words.push_back(std::move(w));
  }
  return words;
}

std::vector<float> noisy(const std::vector<double>& center, double scale, Rng& rng) {
  std::vector<float> v(center.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(center[i] + scale * rng.normal());
  return v;
}

}  // namespace

Dataset generate(const Options& o) {
  if (o.num_classes < 2 || o.signature_tokens < 1 || o.docs_per_class < 1 || o.doc_length < 1) {
    throw InvalidArgument("synthetic corpus needs >= 2 classes and non-empty documents");
  }
  if (2 * o.num_classes > o.dim) throw InvalidArgument("synthetic corpus needs dim >= 2 * num_classes");

  Rng rng(o.seed);
  const std::size_t C = o.num_classes;
  Dataset data;

  const auto words = make_words(C * o.signature_tokens + o.generic_tokens, rng);
  data.signatures.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    data.signatures[c].assign(words.begin() + static_cast<std::ptrdiff_t>(c * o.signature_tokens),
                              words.begin() + static_cast<std::ptrdiff_t>((c + 1) * o.signature_tokens));
  }
  const std::vector<std::string> generic(words.begin() + static_cast<std::ptrdiff_t>(C * o.signature_tokens),
                                         words.end());

  std::vector<std::vector<double>> semantic(C, std::vector<double>(o.dim, 0.0));
  data.centroids.assign(C, std::vector<double>(o.dim, 0.0));
  for (std::size_t c = 0; c < C; ++c) {
    data.centroids[c][c] = o.centroid_norm;
    semantic[c][C + c] = 2.0;
  }

  VectorTable doc_vectors(o.dim);
  VectorTable word_vectors(o.dim);
  VectorTable sem_vectors(o.dim);
  const std::vector<double> origin(o.dim, 0.0);

  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < o.signature_tokens; ++j) {
      std::vector<double> center = data.centroids[c];
      if (j == 0) {
        const auto& next = data.centroids[(c + 1) % C];
        for (std::size_t i = 0; i < o.dim; ++i) center[i] += o.label_confusion * next[i];
      }
      word_vectors.add(data.signatures[c][j], noisy(center, o.word_noise, rng));
      sem_vectors.add(data.signatures[c][j], noisy(semantic[c], o.word_noise, rng));
    }
  }
  for (const auto& w : generic) {
    word_vectors.add(w, noisy(origin, o.word_noise, rng));
    sem_vectors.add(w, noisy(origin, 1.0, rng));
  }

  const std::size_t total = C * o.docs_per_class;
  for (std::size_t n = 0; n < total; ++n) {
    const std::size_t c = n % C;
    char id[32];
    std::snprintf(id, sizeof id, "doc-%05zu", n);

    std::string text;
    for (std::size_t t = 0; t < o.doc_length; ++t) {
      const double u = rng.uniform();
      const std::string* word;
      if (u < o.signature_rate) {
        word = &data.signatures[c][rng.below(o.signature_tokens)];
      } else if (u < o.signature_rate + o.cross_rate) {
        const std::size_t other = (c + 1 + rng.below(C - 1)) % C;
        word = &data.signatures[other][rng.below(o.signature_tokens)];
      } else {
        word = &generic[rng.below(generic.size())];
      }
      if (!text.empty()) text.push_back(' ');
      text += *word;
    }
    data.docs.push_back({id, std::move(text), static_cast<int>(c)});
    doc_vectors.add(id, noisy(data.centroids[c], o.doc_noise, rng));
  }

  for (std::size_t c = 0; c < C; ++c) data.specs.push_back({static_cast<int>(c), data.signatures[c][0], {}});
  data.store = make_store(std::move(doc_vectors), std::move(word_vectors), std::move(sem_vectors));
  return data;
}

Files write(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Files f{dir / "corpus.jsonl", dir / "labels.jsonl", dir / "docs.wndr", dir / "words.wndr", dir / "sem.wndr"};
  save_corpus(f.corpus, data.docs);
  save_label_specs(f.labels, data.specs);
  write_store(data.store, f.doc_vectors, f.word_vectors, f.sem_vectors);
  return f;
}

}  // namespace wander::synthetic
