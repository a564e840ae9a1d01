#pragma once

// Test-side helpers and brute-force oracles. The oracles deliberately share no
// code with the library: they recount, resort and recompute from raw inputs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wander/embed_store.hpp"
#include "wander/rng.hpp"

namespace testing {

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "wander-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string doc_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "d%04zu", i);
  return buf;
}

/// Random document table. With `coarse`, components are small integers so
/// that exact score ties are common.
inline wander::VectorTable random_docs(wander::Rng& rng, std::size_t n, std::size_t dim, bool coarse) {
  wander::VectorTable t(dim);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);  // insertion order unrelated to id order
  for (std::size_t i : order) {
    std::vector<float> v(dim);
    for (auto& x : v) {
      x = coarse ? static_cast<float>(static_cast<int>(rng.below(3)) - 1) : static_cast<float>(rng.normal());
    }
    t.add(doc_id(i), v);
  }
  return t;
}

inline wander::EmbeddingStore store_with_docs(wander::VectorTable docs) {
  const std::size_t dim = docs.dim();
  return wander::make_store(std::move(docs), wander::VectorTable(dim), wander::VectorTable(dim));
}

namespace oracle {

/// Every document scored by a plain dot product, fully sorted by
/// (score desc, id asc), cut to k.
inline std::vector<std::pair<std::string, double>> top_k(const wander::VectorTable& docs,
                                                        const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t r = 0; r < docs.size(); ++r) {
    const auto row = docs.row(r);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += static_cast<double>(row[i]) * q[i];
    all.emplace_back(docs.key(r), s);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

using TokenList = std::vector<std::string>;

/// Class-based TF-IDF of `word` for class `c`, recounted from raw token lists
/// (classes[c] = that class's documents) and evaluated in long double.
inline long double local_score(const std::vector<std::vector<TokenList>>& classes, std::size_t c,
                               const std::string& word, long double alpha) {
  long double tf = 0, cnt = 0, tf_w = 0, total = 0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    for (const auto& doc : classes[k]) {
      const auto n = static_cast<long double>(std::count(doc.begin(), doc.end(), word));
      tf_w += n;
      total += static_cast<long double>(doc.size());
      if (k == c) {
        tf += n;
        if (n > 0) cnt += 1;
      }
    }
  }
  const long double A = total / static_cast<long double>(classes.size());
  return std::pow(tf, alpha) * std::log(1.0L + A / tf_w) * cnt;
}

inline std::vector<long double> softmax(const std::vector<long double>& z) {
  long double m = z[0];
  for (auto v : z) m = std::max(m, v);
  long double sum = 0;
  std::vector<long double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - m);
  for (auto& v : p) v /= sum;
  return p;
}

struct F1 {
  double micro = 0;
  double macro = 0;
  std::vector<double> per_class;
  std::vector<std::vector<long>> confusion;
  double accuracy = 0;
};

/// Confusion matrix filled pair by pair; F1 from per-class precision and
/// recall (0 when undefined).
inline F1 f1(const std::vector<int>& pred, const std::vector<int>& gold, std::size_t C) {
  F1 out;
  out.confusion.assign(C, std::vector<long>(C, 0));
  long correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++out.confusion[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
    if (pred[i] == gold[i]) ++correct;
  }
  long tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (std::size_t c = 0; c < C; ++c) {
    long tp = out.confusion[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < C; ++o) {
      if (o == c) continue;
      fp += out.confusion[o][c];
      fn += out.confusion[c][o];
    }
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    out.per_class.push_back(p + r > 0 ? 2 * p * r / (p + r) : 0.0);
  }
  for (double v : out.per_class) out.macro += v;
  out.macro /= static_cast<double>(C);
  const double mp = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fp_sum);
  const double mr = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fn_sum);
  out.micro = mp + mr > 0 ? 2 * mp * mr / (mp + mr) : 0.0;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  return out;
}

}  // namespace oracle

}  // namespace testing
