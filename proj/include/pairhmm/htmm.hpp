#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairhmm/solver.hpp"
#include "pairhmm/types.hpp"

namespace pairhmm {

struct Corpus {
  std::vector<ObservationSequence> documents;
  std::vector<std::string> vocab;

  int symbols() const noexcept { return static_cast<int>(vocab.size()); }
  std::uint64_t total_tokens() const;
};

// One document per line, whitespace-separated tokens; blank lines are
// dropped. Without a vocabulary, ids are assigned in order of first use.
// With one, every token must already be listed.
Corpus parse_corpus(const std::string& text,
                    const std::optional<std::vector<std::string>>& vocab = std::nullopt,
                    const std::string& origin = "<string>");
std::vector<std::string> parse_vocab(const std::string& text, const std::string& origin = "<string>");
Corpus ingest_corpus(const std::filesystem::path& path,
                     const std::optional<std::filesystem::path>& vocab_path = std::nullopt);

/// Pooled consecutive-pair counts over all documents, divided by Σ(L_d − 1).
CooccurrenceMatrix corpus_cooccurrence(const Corpus& corpus);

struct TopicModel {
  EmissionMatrix topics;
  std::vector<ThetaMatrix> doc_thetas;

  /// Per-document HMM: transitions from Θ_d, shared topics, Θ_d margins as
  /// the initial distribution.
  Hmm document_hmm(std::size_t doc) const;
};

struct HtmmOptions {
  SolverOptions solver{};
  ThetaFitOptions document{};
  int threads = 1;
};

/// Fits Θ_d for one document with the topics held fixed (λ = 0 by default).
ThetaMatrix fit_document_theta(const EmissionMatrix& topics, const ObservationSequence& doc,
                               double lambda = 0.0, const ThetaFitOptions& opts = {});

TopicModel fit_topics(const Corpus& corpus, int k, const HtmmOptions& opts = {});

/// Re-fits every Θ_d against fixed topics.
std::vector<ThetaMatrix> fit_document_thetas(const EmissionMatrix& topics, const Corpus& corpus,
                                             const ThetaFitOptions& opts = {}, int threads = 1);

class DocumentFrequencyIndex {
 public:
  explicit DocumentFrequencyIndex(const Corpus& corpus);

  std::uint64_t documents() const noexcept { return documents_; }
  std::uint64_t freq1(int v) const;
  /// Number of documents containing both words; freq2(v, v) = freq1(v).
  std::uint64_t freq2(int v, int w) const;

 private:
  std::uint64_t documents_ = 0;
  std::vector<std::uint64_t> freq1_;
  std::map<std::pair<int, int>, std::uint64_t> freq2_;
};

struct CoherenceResult {
  std::vector<double> per_topic;
  double mean = 0.0;
  std::vector<std::string> warnings;
};

/// UMass-style coherence over each topic's top_m words: for ranked words
/// v_1, v_2, ... sums log((freq2(v_i, v_j) + eps) / freq1(v_i)) over i < j.
CoherenceResult coherence(const Matrix& topics, const DocumentFrequencyIndex& index,
                          int top_m = 20, double eps = 0.01);

/// Top-m word ids of a topic column, by decreasing probability (ties to the
/// lower id).
std::vector<int> top_words(const Matrix& topics, Index topic, int top_m);

struct PerplexityResult {
  double value = 0.0;
  double log_likelihood = 0.0;
  /// First document with zero likelihood; value is +inf when set.
  std::optional<std::size_t> impossible_document;
};

PerplexityResult perplexity(const TopicModel& model, const Corpus& corpus);

std::vector<int> infer_topics(const TopicModel& model, const Corpus& corpus, std::size_t doc);

// Model directory: model.txt (N, K, D, format_version), topics.txt,
// doc_thetas.txt and vocab.txt.
void save_model(const std::filesystem::path& dir, const TopicModel& model,
                const std::vector<std::string>& vocab);
TopicModel load_model(const std::filesystem::path& dir, std::vector<std::string>* vocab = nullptr);

struct PlantedCorpusConfig {
  int documents = 2000;
  int length = 200;
  int symbols = 50;
  int topics = 3;
  /// Exponent applied to per-document topic weights; larger values focus
  /// each document on fewer topics.
  double focus = 3.0;
  std::uint64_t seed = 0;
};

struct PlantedCorpus {
  Corpus corpus;
  EmissionMatrix topics;
  std::vector<TransitionMatrix> transitions;
};

/// Documents sampled from HMMs that share separable, sparse topics and have
/// their own random transitions.
PlantedCorpus generate_planted_corpus(const PlantedCorpusConfig& cfg);

}  // namespace pairhmm
