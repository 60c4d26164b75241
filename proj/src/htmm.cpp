#include "pairhmm/htmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "pairhmm/error.hpp"
#include "pairhmm/hmm_core.hpp"
#include "pairhmm/matrix_io.hpp"
#include "pairhmm/rng.hpp"
#include "pairhmm/stats.hpp"

namespace pairhmm {
namespace {

constexpr int kFormatVersion = 1;

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// written by exactly one worker, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::size_t next = 0;
  std::mutex lock;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> guard(lock);
          if (next >= count || failure) return;
          i = next++;
        }
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> guard(lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: expected key=value", origin, line_no));
    }
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

std::uint64_t Corpus::total_tokens() const {
  std::uint64_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

std::vector<std::string> parse_vocab(const std::string& text, const std::string& origin) {
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok, extra;
    if (!(ls >> tok)) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: empty vocabulary entry", origin, line_no));
    }
    if (ls >> extra) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: one token per line expected", origin, line_no));
    }
    if (!seen.insert(tok).second) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: duplicate token '{}'", origin, line_no, tok));
    }
    vocab.push_back(tok);
  }
  return vocab;
}

Corpus parse_corpus(const std::string& text,
                    const std::optional<std::vector<std::string>>& vocab,
                    const std::string& origin) {
  Corpus corpus;
  std::unordered_map<std::string, int> ids;
  if (vocab) {
    corpus.vocab = *vocab;
    for (std::size_t i = 0; i < vocab->size(); ++i) ids.emplace((*vocab)[i], static_cast<int>(i));
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    ObservationSequence doc;
    while (ls >> tok) {
      auto it = ids.find(tok);
      if (it == ids.end()) {
        if (vocab) {
          throw Error(ErrorCode::ParseError,
                      fmt::format("{}:{}: token '{}' is not in the vocabulary", origin, line_no, tok));
        }
        it = ids.emplace(tok, static_cast<int>(corpus.vocab.size())).first;
        corpus.vocab.push_back(tok);
      }
      doc.push_back(it->second);
    }
    if (!doc.empty()) corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw Error(ErrorCode::EmptyCorpus, fmt::format("{}: no documents", origin));
  }
  return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path,
                     const std::optional<std::filesystem::path>& vocab_path) {
  std::optional<std::vector<std::string>> vocab;
  if (vocab_path) vocab = parse_vocab(io::read_file(*vocab_path), vocab_path->string());
  return parse_corpus(io::read_file(path), vocab, path.string());
}

CooccurrenceMatrix corpus_cooccurrence(const Corpus& corpus) {
  PairCounts counts(corpus.symbols());
  for (const auto& doc : corpus.documents) counts.add_sequence(doc);
  return counts.normalized();
}

Hmm TopicModel::document_hmm(std::size_t doc) const {
  const ThetaMatrix& theta = doc_thetas.at(doc);
  Vector margins = theta.margins();
  margins /= margins.sum();
  return Hmm(transition_from_theta(theta), topics, StateDistribution(std::move(margins)));
}

ThetaMatrix fit_document_theta(const EmissionMatrix& topics, const ObservationSequence& doc,
                               double lambda, const ThetaFitOptions& opts) {
  const auto k = static_cast<int>(topics.states());
  const CooccurrenceMatrix omega = estimate_pairwise(doc, static_cast<int>(topics.symbols()));
  const ThetaMatrix start = initial_theta(k);
  if (k == 1) return start;
  return fit_theta(omega.matrix(), topics.matrix(), start, lambda, opts).theta;
}

std::vector<ThetaMatrix> fit_document_thetas(const EmissionMatrix& topics, const Corpus& corpus,
                                             const ThetaFitOptions& opts, int threads) {
  std::vector<std::optional<ThetaMatrix>> slots(corpus.documents.size());
  parallel_for(corpus.documents.size(), threads, [&](std::size_t d) {
    slots[d] = fit_document_theta(topics, corpus.documents[d], 0.0, opts);
  });
  std::vector<ThetaMatrix> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

TopicModel fit_topics(const Corpus& corpus, int k, const HtmmOptions& opts) {
  const FitResult fit = sca_solve(corpus_cooccurrence(corpus), k, opts.solver);
  return TopicModel{fit.M, fit_document_thetas(fit.M, corpus, opts.document, opts.threads)};
}

DocumentFrequencyIndex::DocumentFrequencyIndex(const Corpus& corpus)
    : documents_(corpus.documents.size()),
      freq1_(static_cast<std::size_t>(corpus.symbols()), 0) {
  for (const auto& doc : corpus.documents) {
    std::vector<int> words(doc.begin(), doc.end());
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (std::size_t a = 0; a < words.size(); ++a) {
      ++freq1_[static_cast<std::size_t>(words[a])];
      for (std::size_t b = a + 1; b < words.size(); ++b) ++freq2_[{words[a], words[b]}];
    }
  }
}

std::uint64_t DocumentFrequencyIndex::freq1(int v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= freq1_.size()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("word id {} out of range", v));
  }
  return freq1_[static_cast<std::size_t>(v)];
}

std::uint64_t DocumentFrequencyIndex::freq2(int v, int w) const {
  if (v == w) return freq1(v);
  const auto it = freq2_.find({std::min(v, w), std::max(v, w)});
  return it == freq2_.end() ? 0 : it->second;
}

std::vector<int> top_words(const Matrix& topics, Index topic, int top_m) {
  std::vector<int> ids(static_cast<std::size_t>(topics.rows()));
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](int a, int b) { return topics(a, topic) > topics(b, topic); });
  ids.resize(static_cast<std::size_t>(std::min<Index>(top_m, topics.rows())));
  return ids;
}

CoherenceResult coherence(const Matrix& topics, const DocumentFrequencyIndex& index, int top_m,
                          double eps) {
  if (index.documents() == 0) throw Error(ErrorCode::EmptyIndex, "document index is empty");
  if (top_m < 1 || top_m > topics.rows()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("top_m = {} must lie in [1, {}]", top_m, topics.rows()));
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
  CoherenceResult out;
  for (Index k = 0; k < topics.cols(); ++k) {
    std::vector<int> words;
    for (int v : top_words(topics, k, top_m)) {
      if (index.freq1(v) == 0) {
        out.warnings.push_back(
            fmt::format("topic {}: word {} never occurs in the corpus; skipped", k, v));
        continue;
      }
      words.push_back(v);
    }
    double score = 0.0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const double denom = static_cast<double>(index.freq1(words[i]));
      for (std::size_t j = i + 1; j < words.size(); ++j) {
        score += std::log((static_cast<double>(index.freq2(words[i], words[j])) + eps) / denom);
      }
    }
    out.per_topic.push_back(score);
  }
  out.mean = std::accumulate(out.per_topic.begin(), out.per_topic.end(), 0.0) /
             static_cast<double>(out.per_topic.size());
  return out;
}

PerplexityResult perplexity(const TopicModel& model, const Corpus& corpus) {
  if (model.doc_thetas.size() != corpus.documents.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("model has {} documents, corpus has {}", model.doc_thetas.size(),
                            corpus.documents.size()));
  }
  if (model.topics.symbols() != corpus.symbols()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("model has {} words, corpus has {}", model.topics.symbols(),
                            corpus.symbols()));
  }
  PerplexityResult out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const double ll = forward_log_likelihood(model.document_hmm(d), corpus.documents[d]);
    if (!std::isfinite(ll)) {
      out.impossible_document = d;
      out.log_likelihood = -std::numeric_limits<double>::infinity();
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    out.log_likelihood += ll;
  }
  out.value = std::exp(-out.log_likelihood / static_cast<double>(corpus.total_tokens()));
  return out;
}

std::vector<int> infer_topics(const TopicModel& model, const Corpus& corpus, std::size_t doc) {
  if (doc >= corpus.documents.size() || doc >= model.doc_thetas.size()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("document {} out of range", doc));
  }
  return viterbi(model.document_hmm(doc), corpus.documents[doc]);
}

void save_model(const std::filesystem::path& dir, const TopicModel& model,
                const std::vector<std::string>& vocab) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / "model.txt",
                 fmt::format("N={}\nK={}\nD={}\nformat_version={}\n", model.topics.symbols(),
                             model.topics.states(), model.doc_thetas.size(), kFormatVersion));
  io::write_matrix(dir / "topics.txt", model.topics.matrix());
  std::vector<Matrix> stack;
  for (const auto& t : model.doc_thetas) stack.push_back(t.matrix());
  io::write_file(dir / "doc_thetas.txt", io::format_matrix_stack(stack));
  std::string words;
  for (const auto& w : vocab) words += w + '\n';
  io::write_file(dir / "vocab.txt", words);
}

TopicModel load_model(const std::filesystem::path& dir, std::vector<std::string>* vocab) {
  const auto meta = parse_key_values(io::read_file(dir / "model.txt"), (dir / "model.txt").string());
  auto field = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) {
      throw Error(ErrorCode::ParseError, fmt::format("model.txt: missing '{}'", key));
    }
    return std::stoll(it->second);
  };
  if (field("format_version") != kFormatVersion) {
    throw Error(ErrorCode::ParseError, "model.txt: unsupported format_version");
  }
  EmissionMatrix topics(io::read_matrix(dir / "topics.txt"));
  const auto stack = io::parse_matrix_stack(io::read_file(dir / "doc_thetas.txt"),
                                            (dir / "doc_thetas.txt").string());
  if (topics.symbols() != field("N") || topics.states() != field("K") ||
      static_cast<long long>(stack.size()) != field("D")) {
    throw Error(ErrorCode::DimensionMismatch, "model files disagree with model.txt");
  }
  std::vector<ThetaMatrix> thetas;
  for (const auto& m : stack) thetas.emplace_back(m);
  if (vocab) *vocab = parse_vocab(io::read_file(dir / "vocab.txt"), (dir / "vocab.txt").string());
  return TopicModel{std::move(topics), std::move(thetas)};
}

PlantedCorpus generate_planted_corpus(const PlantedCorpusConfig& cfg) {
  if (cfg.topics < 1 || cfg.symbols < cfg.topics || cfg.documents < 1 || cfg.length < 1) {
    throw Error(ErrorCode::InvalidArgument, "planted corpus needs D, L >= 1 and N >= K >= 1");
  }
  const Index n = cfg.symbols;
  const Index k = cfg.topics;
  Rng topic_rng(derive_seed(cfg.seed, 1));
  Matrix m = Matrix::Zero(n, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double e = topic_rng.exponential();
      if (topic_rng.uniform() < 0.5) m(i, j) = e;
    }
  }
  m.topRows(k).setIdentity();
  EmissionMatrix topics(normalize_columns(std::move(m)));

  Corpus corpus;
  for (Index i = 0; i < n; ++i) corpus.vocab.push_back(fmt::format("w{}", i));
  std::vector<TransitionMatrix> transitions;
  for (int d = 0; d < cfg.documents; ++d) {
    Rng rng(derive_seed(derive_seed(cfg.seed, 2), static_cast<std::uint64_t>(d)));
    Vector weight(k);
    for (Index j = 0; j < k; ++j) weight(j) = std::pow(rng.exponential(), cfg.focus);
    Matrix p(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) p(i, j) = rng.exponential() * weight(j) + 1e-3;
    TransitionMatrix trans(normalize_rows(std::move(p)));
    const Hmm hmm(trans, topics, stationary_distribution(trans));
    corpus.documents.push_back(sample_sequence(
        hmm, static_cast<std::size_t>(cfg.length),
        derive_seed(derive_seed(cfg.seed, 3), static_cast<std::uint64_t>(d))));
    transitions.push_back(std::move(trans));
  }
  return PlantedCorpus{std::move(corpus), std::move(topics), std::move(transitions)};
}

}  // namespace pairhmm
