#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "wander/errors.hpp"

using namespace wander;
using testing::TempDir;

namespace {

VectorTable table(std::size_t dim, std::vector<std::pair<std::string, std::vector<float>>> rows) {
  VectorTable t(dim);
  for (auto& [k, v] : rows) t.add(k, v);
  return t;
}

EmbeddingStore two_word_store() {
  return make_store(table(2, {{"d1", {1, 0}}}), table(2, {{"alpha", {1, 0}}, {"beta", {0, 1}}}),
                    table(2, {{"alpha", {3, 4}}, {"beta", {0, 2}}}));
}

// A python line-protocol embedder returning (len(text), 1, 0) or errors.
std::string fake_embedder(const TempDir& dir, const std::string& body) {
  const auto path = dir / "embed.py";
  testing::write_file(path, "import json, sys\n"
                            "for line in sys.stdin:\n"
                            "    try:\n"
                            "        req = json.loads(line)\n"
                            "    except ValueError:\n"
                            "        print(json.dumps({'error': 'parse'}), flush=True)\n"
                            "        continue\n"
                            "    text = req['text']\n" +
                                body);
  return "python3 " + path.string();
}

}  // namespace

TEST_CASE("make_store checks dimensions") {
  const auto s = make_store(table(4, {{"a", {1, 2, 3, 4}}, {"b", {0, 0, 0, 1}}, {"c", {1, 1, 1, 1}}}),
                            table(4, {{"w", {1, 0, 0, 0}}}), table(4, {}));
  CHECK(s.dim == 4);
  try {
    make_store(VectorTable(4), VectorTable(8), VectorTable(4));
    FAIL("expected DimensionMismatch");
  } catch (const DimensionMismatch& e) {
    CHECK(e.expected() == 4);
    CHECK(e.got() == 8);
  }
  CHECK_THROWS_AS(make_store(VectorTable(4), VectorTable(4), VectorTable(3)), DimensionMismatch);
}

TEST_CASE("store files round trip and truncation is detected") {
  TempDir dir;
  const auto s = two_word_store();
  write_store(s, dir / "d.wndr", dir / "w.wndr", dir / "s.wndr");
  const auto back = load_store(dir / "d.wndr", dir / "w.wndr", dir / "s.wndr");
  CHECK(back.doc_vectors == s.doc_vectors);
  CHECK(back.doc_word_vectors == s.doc_word_vectors);
  CHECK(back.sem_word_vectors == s.sem_word_vectors);

  std::string bytes = testing::read_file(dir / "d.wndr");
  testing::write_file(dir / "d.wndr", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_store(dir / "d.wndr", dir / "w.wndr", dir / "s.wndr"), CorruptHeader);
}

TEST_CASE("bind restricts to the corpus in corpus order") {
  const auto s = make_store(table(1, {{"a", {1}}, {"b", {2}}, {"c", {3}}}), VectorTable(1), VectorTable(1));
  const auto bound = s.bind({{"c", "x", {}}, {"a", "y", {}}});
  CHECK(bound.doc_vectors.keys() == std::vector<std::string>{"c", "a"});
  CHECK(bound.doc_vectors.find("c").value()[0] == 3.0f);
  try {
    s.bind({{"a", "x", {}}, {"z", "y", {}}});
    FAIL("expected MissingDocVector");
  } catch (const MissingDocVector& e) {
    CHECK(e.id() == "z");
  }
}

TEST_CASE("embed_query is the mean of known token vectors") {
  const auto s = two_word_store();
  CHECK(embed_query(s, "alpha") == std::vector<double>{1.0, 0.0});
  CHECK(embed_query(s, "Alpha beta") == std::vector<double>{0.5, 0.5});
  // Unknown tokens are skipped; repeated tokens count once per occurrence.
  CHECK(embed_query(s, "alpha unknown alpha beta") == std::vector<double>{2.0 / 3.0, 1.0 / 3.0});
  CHECK_THROWS_AS(embed_query(s, "gamma delta"), NoKnownTokens);
  CHECK_THROWS_AS(embed_query(s, "the a"), NoKnownTokens);
  CHECK(embed_semantic(s, "alpha beta") == std::vector<double>{1.5, 3.0});
}

TEST_CASE("cosine") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{-2, 0.5, 4};
  CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine(a, b) == doctest::Approx((-2 + 1 + 12) / (std::sqrt(14.0) * std::sqrt(4 + 0.25 + 16))));
  CHECK(cosine(a, b) == doctest::Approx(cosine(b, a)).epsilon(1e-15));
  // Scale invariance and range.
  wander::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(5), y(5), y2(5);
    for (std::size_t j = 0; j < 5; ++j) {
      x[j] = rng.normal();
      y[j] = rng.normal();
      y2[j] = 7.5 * y[j];
    }
    const double c = cosine(x, y);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(cosine(x, y2) == doctest::Approx(c).epsilon(1e-12));
  }
  CHECK_THROWS_AS(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0}), ZeroNorm);
  CHECK_THROWS_AS(cosine(std::vector<double>{1}, std::vector<double>{1, 0}), DimensionMismatch);
  const std::vector<float> f{1.0f, 0.0f};
  CHECK(cosine(f, std::vector<double>{2, 0}) == 1.0);
}

TEST_CASE("line-protocol embedder") {
  TempDir dir;
  const auto s = make_store(VectorTable(3), VectorTable(3), VectorTable(3));

  SUBCASE("vectors come back in request order") {
    LineProtocolEmbedder e(fake_embedder(dir, "    print(json.dumps({'vector': [len(text), 1, 0]}), flush=True)\n"));
    CHECK(embed_query(s, "Diabetes insulin", &e) == std::vector<double>{16, 1, 0});
    for (int i = 0; i < 1000; ++i) {
      const std::string text(static_cast<std::size_t>(i % 37), 'x');
      REQUIRE(e.embed(text)[0] == static_cast<float>(text.size()));
    }
    // Text needing JSON escapes survives the trip.
    CHECK(e.embed("a\"b\\c\nd")[0] == 7.0f);
  }
  SUBCASE("wrong dimension") {
    LineProtocolEmbedder e(fake_embedder(dir, "    print(json.dumps({'vector': [1, 2]}), flush=True)\n"));
    CHECK_THROWS_AS(embed_query(s, "x", &e), DimensionMismatch);
  }
  SUBCASE("error reply") {
    LineProtocolEmbedder e(fake_embedder(dir, "    print(json.dumps({'error': 'boom'}), flush=True)\n"));
    CHECK_THROWS_AS(e.embed("x"), EmbedderFailure);
    CHECK_THROWS_AS(e.embed("x"), EmbedderFailure);
  }
  SUBCASE("garbage reply") {
    LineProtocolEmbedder e(fake_embedder(dir, "    print('not json', flush=True)\n"));
    CHECK_THROWS_AS(e.embed("x"), EmbedderFailure);
  }
  SUBCASE("child exits early") {
    LineProtocolEmbedder e(fake_embedder(dir, "    sys.exit(3)\n"));
    CHECK_THROWS_AS(e.embed("x"), EmbedderFailure);
  }
  SUBCASE("command not found") {
    LineProtocolEmbedder e("/nonexistent/embedder-binary");
    CHECK_THROWS_AS(e.embed("x"), EmbedderFailure);
  }
}
