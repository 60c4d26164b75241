#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "oracles.hpp"
#include "pairhmm/error.hpp"
#include "pairhmm/evaluation.hpp"
#include "pairhmm/geometry.hpp"
#include "pairhmm/hmm_core.hpp"
#include "pairhmm/htmm.hpp"
#include "pairhmm/stats.hpp"

using namespace pairhmm;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Corpus corpus_of(std::vector<ObservationSequence> docs, int n) {
  Corpus c;
  c.documents = std::move(docs);
  for (int v = 0; v < n; ++v) c.vocab.push_back("w" + std::to_string(v));
  return c;
}

// One-topic model: topic column m, Θ = [1] for each document.
TopicModel single_topic_model(const Vector& m, std::size_t docs) {
  Matrix t(m.size(), 1);
  t.col(0) = m;
  return {EmissionMatrix(t), std::vector<ThetaMatrix>(docs, ThetaMatrix(Matrix::Ones(1, 1)))};
}

}  // namespace

TEST_CASE("corpus ingestion") {
  SUBCASE("first-use ids") {
    const Corpus c = parse_corpus("a b a\nb c\n");
    CHECK(c.symbols() == 3);
    CHECK(c.documents == std::vector<ObservationSequence>{{0, 1, 0}, {1, 2}});
    CHECK(c.total_tokens() == 5);
  }
  SUBCASE("blank lines are dropped") {
    CHECK(parse_corpus("\na b\n\n  \nb\n").documents.size() == 2);
  }
  SUBCASE("explicit vocabulary preserves ids") {
    const std::vector<std::string> vocab = parse_vocab("c\nb\na\n");
    const Corpus c = parse_corpus("a b a\nb c\n", vocab);
    CHECK(c.vocab == vocab);
    CHECK(c.documents == std::vector<ObservationSequence>{{2, 1, 2}, {1, 0}});
    const Corpus again = parse_corpus("a b a\nb c\n", c.vocab);
    CHECK(again.documents == c.documents);
  }
  SUBCASE("errors") {
    try {
      parse_corpus("a b\nb zz\n", std::vector<std::string>{"a", "b"}, "docs.txt");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("docs.txt:2") != std::string::npos);
    }
    CHECK(code_of([] { parse_corpus("\n\n"); }) == ErrorCode::EmptyCorpus);
    CHECK(code_of([] { parse_vocab("a\nb\na\n"); }) == ErrorCode::ParseError);
  }
  SUBCASE("files") {
    const auto dir = std::filesystem::temp_directory_path() / "pairhmm_htmm_ingest";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "docs.txt") << "x y\ny z x\n";
    std::ofstream(dir / "vocab.txt") << "z\ny\nx\n";
    const Corpus c = ingest_corpus(dir / "docs.txt", dir / "vocab.txt");
    CHECK(c.documents == std::vector<ObservationSequence>{{2, 1}, {1, 0, 2}});
    CHECK(code_of([&] { ingest_corpus(dir / "missing.txt"); }) == ErrorCode::IoError);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("corpus co-occurrence") {
  SUBCASE("hand count") {
    const Matrix om = corpus_cooccurrence(corpus_of({{0, 1}, {1, 0}}, 2)).matrix();
    CHECK(om(0, 0) == 0.0);
    CHECK(om(0, 1) == 0.5);
    CHECK(om(1, 0) == 0.5);
    CHECK(om(1, 1) == 0.0);
  }
  SUBCASE("single document equals its own estimate") {
    const ObservationSequence doc{0, 2, 1, 1, 0, 2};
    CHECK(corpus_cooccurrence(corpus_of({doc}, 3)).matrix() == estimate_pairwise(doc, 3).matrix());
  }
  SUBCASE("duplicating the corpus changes nothing and mass is exactly one") {
    Rng rng(1);
    std::vector<ObservationSequence> docs;
    for (int d = 0; d < 5; ++d) {
      ObservationSequence s;
      for (int t = 0; t < 3 + d; ++t) s.push_back(static_cast<int>(rng.uniform() * 4.0));
      docs.push_back(s);
    }
    const Matrix once = corpus_cooccurrence(corpus_of(docs, 4)).matrix();
    std::vector<ObservationSequence> twice = docs;
    twice.insert(twice.end(), docs.begin(), docs.end());
    CHECK(corpus_cooccurrence(corpus_of(twice, 4)).matrix() == once);
    CHECK(once.sum() == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("single-word documents contribute no pairs") {
    CHECK(code_of([] { corpus_cooccurrence(corpus_of({{0}, {1}}, 2)); }) == ErrorCode::NoPairs);
    CHECK(corpus_cooccurrence(corpus_of({{0}, {0, 1}}, 2)).matrix()(0, 1) == 1.0);
  }
}

TEST_CASE("topic fitting") {
  SUBCASE("one topic is the unigram distribution") {
    const Corpus c = corpus_of({{0, 1, 1, 2}, {2, 2, 0}}, 3);
    const TopicModel model = fit_topics(c, 1);
    const Matrix om = corpus_cooccurrence(c).matrix();
    const Vector marg = 0.5 * (om.rowwise().sum() + om.colwise().sum().transpose());
    CHECK((model.topics.matrix().col(0) - marg).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(model.doc_thetas.size() == 2);
    for (const ThetaMatrix& t : model.doc_thetas) CHECK(t.matrix()(0, 0) == 1.0);
  }
  SUBCASE("a single-topic document concentrates on its topic") {
    const EmissionMatrix topics = generate_scattered_emission(12, 3, EmissionMode::IdentityTop, 5);
    for (Index k = 0; k < 3; ++k) {
      Matrix col(12, 1);
      col.col(0) = topics.matrix().col(k);
      const Hmm one(TransitionMatrix(Matrix::Ones(1, 1)), EmissionMatrix(col), StateDistribution(Vector::Ones(1)));
      const ObservationSequence doc = sample_sequence(one, 300, 10 + static_cast<std::uint64_t>(k));
      const ThetaMatrix theta = fit_document_theta(topics, doc);
      CAPTURE(k);
      CHECK(theta.matrix()(k, k) >= 0.9);

      TopicModel model{topics, {theta}};
      const std::vector<int> path = infer_topics(model, corpus_of({doc}, 12), 0);
      CHECK(path.size() == doc.size());
      CHECK(std::all_of(path.begin(), path.end(), [&](int z) { return z == k; }));
    }
  }
  SUBCASE("document fits are thread-count independent") {
    PlantedCorpusConfig cfg;
    cfg.documents = 30;
    cfg.length = 60;
    cfg.symbols = 12;
    const PlantedCorpus planted = generate_planted_corpus(cfg);
    const auto serial = fit_document_thetas(planted.topics, planted.corpus, {}, 1);
    const auto parallel = fit_document_thetas(planted.topics, planted.corpus, {}, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t d = 0; d < serial.size(); ++d) CHECK(serial[d].matrix() == parallel[d].matrix());
  }
}

TEST_CASE("planted corpus") {
  PlantedCorpusConfig cfg;
  cfg.documents = 40;
  cfg.length = 50;
  const PlantedCorpus a = generate_planted_corpus(cfg);
  const PlantedCorpus b = generate_planted_corpus(cfg);
  CHECK(a.corpus.documents == b.corpus.documents);
  CHECK(a.corpus.documents.size() == 40);
  CHECK(a.corpus.symbols() == 50);
  CHECK(a.transitions.size() == 40);
  CHECK(check_scattered_necessary(a.topics).separable);
}

TEST_CASE("coherence") {
  SUBCASE("single pair by hand") {
    // word 0 appears in 4 documents, together with word 1 in 2 of them.
    const Corpus c = corpus_of({{0, 1}, {0, 1}, {0}, {0, 2}, {1, 2}}, 3);
    const DocumentFrequencyIndex index(c);
    CHECK(index.freq1(0) == 4);
    CHECK(index.freq2(0, 1) == 2);
    CHECK(index.freq2(1, 0) == 2);
    CHECK(index.freq2(2, 2) == 2);
    Matrix topics(3, 1);
    topics << 0.6, 0.3, 0.1;
    const CoherenceResult r = coherence(topics, index, 2, 0.01);
    CHECK(r.per_topic.at(0) == doctest::Approx(std::log(2.01 / 4.0)).epsilon(1e-14));
    CHECK(r.mean == r.per_topic[0]);
  }
  SUBCASE("words that always co-occur score just above zero") {
    const Corpus c = corpus_of({{0, 1, 2}, {2, 1, 0}, {1, 0, 2}}, 3);
    Matrix topics(3, 1);
    topics << 0.5, 0.3, 0.2;
    const double v = coherence(topics, DocumentFrequencyIndex(c), 3, 0.01).mean;
    CHECK(v > 0.0);  // log((3 + eps) / 3) > 0 for each of three pairs
    CHECK(v == doctest::Approx(3 * std::log(3.01 / 3.0)));
  }
  SUBCASE("monotone in eps, unaffected by unrelated documents") {
    const PlantedCorpus planted = generate_planted_corpus({60, 40, 20, 3, 3.0, 2});
    const DocumentFrequencyIndex index(planted.corpus);
    double prev = -std::numeric_limits<double>::infinity();
    for (double eps : {1e-3, 1e-2, 0.1, 1.0}) {
      const double v = coherence(planted.topics.matrix(), index, 5, eps).mean;
      CHECK(v >= prev);
      prev = v;
    }
    Corpus extended = planted.corpus;
    Matrix topics = Matrix::Zero(21, 3);
    topics.topRows(20) = planted.topics.matrix();
    extended.vocab.push_back("unused");
    extended.documents.push_back({20, 20});
    const CoherenceResult before = coherence(planted.topics.matrix(), index, 5);
    const CoherenceResult after = coherence(topics, DocumentFrequencyIndex(extended), 5);
    for (std::size_t k = 0; k < 3; ++k) CHECK(after.per_topic[k] == doctest::Approx(before.per_topic[k]));
  }
  SUBCASE("errors and warnings") {
    const Corpus c = corpus_of({{0, 1}}, 3);
    Matrix topics(3, 1);
    topics << 0.2, 0.3, 0.5;
    const CoherenceResult r = coherence(topics, DocumentFrequencyIndex(c), 3);
    CHECK_FALSE(r.warnings.empty());
    CHECK(code_of([&] { coherence(topics, DocumentFrequencyIndex(c), 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { coherence(topics, DocumentFrequencyIndex(c), 2, 0.0); }) == ErrorCode::InvalidArgument);
    Corpus empty;
    empty.vocab = {"a", "b", "c"};
    CHECK(code_of([&] { coherence(topics, DocumentFrequencyIndex(empty), 2); }) == ErrorCode::EmptyIndex);
  }
}

TEST_CASE("perplexity") {
  SUBCASE("one word with probability one half") {
    Vector m(2);
    m << 0.5, 0.5;
    const PerplexityResult r = perplexity(single_topic_model(m, 1), corpus_of({{0}}, 2));
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_FALSE(r.impossible_document.has_value());
  }
  SUBCASE("uniform topics give N") {
    Rng rng(3);
    const Matrix uniform = Matrix::Constant(7, 3, 1.0 / 7);
    std::vector<ObservationSequence> docs{{0, 1, 6, 6}, {3, 2}, {5}};
    TopicModel model{EmissionMatrix(uniform), {}};
    for (std::size_t d = 0; d < docs.size(); ++d) model.doc_thetas.emplace_back(oracle::random_feasible_theta(3, rng));
    CHECK(perplexity(model, corpus_of(docs, 7)).value == doctest::Approx(7.0).epsilon(1e-12));
  }
  SUBCASE("duplicating the corpus leaves it unchanged") {
    const PlantedCorpus planted = generate_planted_corpus({20, 30, 15, 3, 3.0, 4});
    const TopicModel model = fit_topics(planted.corpus, 3);
    Corpus twice = planted.corpus;
    twice.documents.insert(twice.documents.end(), planted.corpus.documents.begin(), planted.corpus.documents.end());
    TopicModel model2 = model;
    model2.doc_thetas.insert(model2.doc_thetas.end(), model.doc_thetas.begin(), model.doc_thetas.end());
    CHECK(perplexity(model2, twice).value == doctest::Approx(perplexity(model, planted.corpus).value).epsilon(1e-12));
  }
  SUBCASE("impossible document gives infinity and its index") {
    Vector m(3);
    m << 0.5, 0.5, 0.0;
    const PerplexityResult r = perplexity(single_topic_model(m, 3), corpus_of({{0, 1}, {1, 2}, {0}}, 3));
    CHECK(std::isinf(r.value));
    CHECK(r.impossible_document == std::optional<std::size_t>{1});
  }
}

TEST_CASE("inference with one topic is all zeros") {
  Vector m(3);
  m << 0.2, 0.3, 0.5;
  const std::vector<int> path = infer_topics(single_topic_model(m, 1), corpus_of({{0, 2, 1, 1}}, 3), 0);
  CHECK(path == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("model save and load round trip") {
  const PlantedCorpus planted = generate_planted_corpus({10, 30, 12, 3, 3.0, 6});
  const TopicModel model = fit_topics(planted.corpus, 3);
  const auto dir = std::filesystem::temp_directory_path() / "pairhmm_model_rt";
  std::filesystem::remove_all(dir);
  save_model(dir, model, planted.corpus.vocab);
  std::vector<std::string> vocab;
  const TopicModel back = load_model(dir, &vocab);
  CHECK(vocab == planted.corpus.vocab);
  CHECK(back.topics.matrix() == model.topics.matrix());
  REQUIRE(back.doc_thetas.size() == model.doc_thetas.size());
  for (std::size_t d = 0; d < model.doc_thetas.size(); ++d) CHECK(back.doc_thetas[d].matrix() == model.doc_thetas[d].matrix());
  std::filesystem::remove_all(dir);
  CHECK(code_of([&] { load_model(dir); }) == ErrorCode::IoError);
}
