// pairhmm: command-line front end. Every subcommand that writes an output
// directory also writes manifest.json there; `pairhmm rerun` replays one.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "pairhmm/error.hpp"
#include "pairhmm/evaluation.hpp"
#include "pairhmm/geometry.hpp"
#include "pairhmm/hmm_core.hpp"
#include "pairhmm/htmm.hpp"
#include "pairhmm/matrix_io.hpp"
#include "pairhmm/rng.hpp"
#include "pairhmm/solver.hpp"
#include "pairhmm/stats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace pairhmm;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output sink: a directory when --out is given, otherwise standard output
// (report subcommands only).
class Output {
 public:
  explicit Output(std::optional<fs::path> dir) : dir_(std::move(dir)) {
    if (dir_) fs::create_directories(*dir_);
  }

  bool has_dir() const { return dir_.has_value(); }
  const fs::path& dir() const { return *dir_; }

  void emit(const std::string& name, const std::string& contents) const {
    if (dir_) {
      io::write_file(*dir_ / name, contents);
    } else {
      std::fwrite(contents.data(), 1, contents.size(), stdout);
    }
  }

 private:
  std::optional<fs::path> dir_;
};

struct Command {
  CLI::App* app = nullptr;
  // Options naming input files or directories; their digests go into the
  // manifest and are checked on rerun.
  std::set<std::string> inputs;
  bool needs_out = true;
  std::function<void(const Output&)> run;
};

std::string csv_header_and_rows(const std::string& header, const std::vector<std::string>& rows) {
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::string digest_path(const fs::path& p) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) {
      acc += f.filename().string() + ":" + io::sha256_hex(io::read_file(f)) + "\n";
    }
    return io::sha256_hex(acc);
  }
  return io::sha256_hex(io::read_file(p));
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError(fmt::format("bad integer '{}' in list '{}'", item, s));
    }
  }
  if (out.empty()) throw UsageError(fmt::format("empty list '{}'", s));
  return out;
}

EmissionMode parse_mode(const std::string& s) {
  return s == "sparse50" ? EmissionMode::Sparse50 : EmissionMode::IdentityTop;
}

CooccurrenceMatrix read_omega(const std::string& path) {
  return CooccurrenceMatrix(io::read_matrix(path));
}

std::string loss_trace_csv(const FitResult& fit) {
  std::string out = "iter,loss,alpha,newton_iters\n";
  for (const auto& e : fit.log) {
    out += fmt::format("{},{:.17g},{:.6g},{}\n", e.iter, e.loss, e.alpha, e.newton_iters);
  }
  return out;
}


struct CliState {
  std::optional<std::string> out_dir;
  int threads = 1;
  std::string corpus_path, vocab_path, model_dir;
  struct {
    int n = 20, k = 5;
    std::uint64_t length = 100000, seed = 0;
    std::string mode = "identity_top";
    std::string emission_path, transition_path;
    int count = 1;
  } simulate;
  struct {
    std::string input;
    int n = 0;
    std::string window = "all";
  } cooc;
  struct {
    std::string input;
    int n = 0;
  } triple;
  struct {
    std::string omega_path;
    int k = 0;
    SolverOptions opts;
    std::string init = "spa";
    std::string init_emission;
  } factorize;
  struct {
    std::string omega_path;
    int k = 0, iters = 5000;
    std::uint64_t seed = 0;
  } nmf;
  struct {
    std::string true_m, est_m, true_p, est_p;
  } evaluate;
  struct {
    std::string config_path;
    int n = 16, k = 4, nmf_iters = 5000, bw_iters = 500;
    std::string lengths = "10000,100000,1000000", seeds = "0,1,2,3,4,5,6,7,8,9";
    std::string mode = "identity_top", methods = "proposed,nmf", timing = "on";
    double lambda = 0.05;
  } experiment;
  struct {
    int k_max = 10;
  } volume;
  struct {
    std::string emission_path;
    double zero_tol = kDefaultZeroTol;
  } scatter;
  struct {
    int k = 0;
    HtmmOptions opts;
  } train;
  struct {
    std::size_t doc = 0;
  } infer;
  struct {
    int top_m = 20;
    double eps = 0.01;
    std::string topics_path;
  } coh;

};

Corpus load_corpus(const CliState& st) {
  return ingest_corpus(st.corpus_path, st.vocab_path.empty()
                                           ? std::nullopt
                                           : std::optional<fs::path>(st.vocab_path));
}

// Builds the full command table on `app`, binding every option into `st`.
std::map<std::string, Command> build_commands(CLI::App& app, CliState& st) {
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::map<std::string, Command> cmds;

  auto add = [&](const std::string& name, const std::string& desc, bool needs_out) -> Command& {
    Command& c = cmds[name];
    c.app = app.add_subcommand(name, desc);
    c.needs_out = needs_out;
    auto* out = c.app->add_option("--out", st.out_dir, "output directory");
    if (needs_out) out->required();
    c.app->add_option("--threads", st.threads, "worker thread cap (1 = bitwise deterministic)")
        ->check(CLI::PositiveNumber);
    return c;
  };

  // simulate ---------------------------------------------------------------
  {
    auto& a = st.simulate;
    Command& c = add("simulate", "sample observation sequences from an HMM", true);
    c.app->add_option("--n", a.n, "alphabet size")->check(CLI::PositiveNumber);
    c.app->add_option("--k", a.k, "hidden states")->check(CLI::PositiveNumber);
    c.app->add_option("--length", a.length, "tokens per sequence")->check(CLI::PositiveNumber);
    c.app->add_option("--count", a.count, "number of sequences")->check(CLI::PositiveNumber);
    c.app->add_option("--seed", a.seed, "random seed");
    c.app->add_option("--mode", a.mode, "emission generator")
        ->check(CLI::IsMember({"identity_top", "sparse50"}));
    c.app->add_option("--emission", a.emission_path, "emission matrix file (overrides generator)");
    c.app->add_option("--transition", a.transition_path, "transition matrix file (overrides generator)");
    c.inputs = {"--emission", "--transition"};
    c.run = [&st, &a = a](const Output& out) {
      const EmissionMatrix m = a.emission_path.empty()
                                   ? generate_scattered_emission(a.n, a.k, parse_mode(a.mode), derive_seed(a.seed, 1))
                                   : EmissionMatrix(io::read_matrix(a.emission_path));
      const TransitionMatrix p = a.transition_path.empty()
                                     ? generate_random_transition(a.k, derive_seed(a.seed, 2))
                                     : TransitionMatrix(io::read_matrix(a.transition_path));
      const Hmm hmm(p, m, stationary_distribution(p));
      std::vector<ObservationSequence> seqs;
      for (int i = 0; i < a.count; ++i) {
        seqs.push_back(sample_sequence(hmm, a.length, derive_seed(derive_seed(a.seed, 3), static_cast<std::uint64_t>(i))));
      }
      out.emit("emission.txt", io::format_matrix(m.matrix()));
      out.emit("transition.txt", io::format_matrix(p.matrix()));
      out.emit("initial.txt", io::format_matrix(hmm.initial.vector().transpose()));
      out.emit("sequences.txt", io::format_sequences(seqs));
    };
  }

  // cooc / triple ------------------------------------------------------------
  {
    auto& a = st.cooc;
    Command& c = add("cooc", "estimate the pairwise co-occurrence matrix", true);
    c.app->add_option("--input", a.input, "sequence file")->required();
    c.app->add_option("--n", a.n, "alphabet size")->required()->check(CLI::PositiveNumber);
    c.app->add_option("--window", a.window, "pair window")
        ->check(CLI::IsMember({"all", "with_predecessor"}));
    c.inputs = {"--input"};
    c.run = [&st, &a = a](const Output& out) {
      const auto seqs = io::parse_sequences(io::read_file(a.input), a.input);
      PairCounts counts(a.n);
      const PairWindow w = a.window == "all" ? PairWindow::All : PairWindow::WithPredecessor;
      for (const auto& s : seqs) counts.add_sequence(s, w);
      out.emit("omega.txt", io::format_matrix(counts.normalized().matrix()));
    };
  }
  {
    auto& a = st.triple;
    Command& c = add("triple", "estimate the triple co-occurrence tensor", true);
    c.app->add_option("--input", a.input, "sequence file")->required();
    c.app->add_option("--n", a.n, "alphabet size")->required()->check(CLI::PositiveNumber);
    c.inputs = {"--input"};
    c.run = [&st, &a = a](const Output& out) {
      const auto seqs = io::parse_sequences(io::read_file(a.input), a.input);
      if (seqs.size() != 1) throw UsageError("triple expects exactly one sequence");
      out.emit("triple.txt", io::format_tensor(estimate_triple(seqs.front(), a.n)));
    };
  }

  // factorize / nmf ----------------------------------------------------------
  {
    auto& a = st.factorize;
    Command& c = add("factorize", "identify M and Θ from a co-occurrence matrix", true);
    c.app->add_option("--omega", a.omega_path, "co-occurrence matrix file")->required();
    c.app->add_option("--k", a.k, "hidden states")->required()->check(CLI::PositiveNumber);
    c.app->add_option("--lambda", a.opts.lambda, "determinant weight")->check(CLI::NonNegativeNumber);
    c.app->add_option("--init", a.init, "initialization")
        ->check(CLI::IsMember({"spa", "random", "provided"}));
    c.app->add_option("--init-emission", a.init_emission, "initial emission file for --init provided");
    c.app->add_option("--max-iters", a.opts.max_outer_iters, "outer iteration cap")
        ->check(CLI::NonNegativeNumber);
    c.app->add_option("--warm-start-iters", a.opts.warm_start_iters, "Θ-only iterations before joint updates")
        ->check(CLI::NonNegativeNumber);
    c.app->add_option("--tol", a.opts.outer_tol, "relative loss-decrease threshold")
        ->check(CLI::PositiveNumber);
    c.app->add_option("--seed", a.opts.seed, "seed for random initialization");
    c.inputs = {"--omega", "--init-emission"};
    c.run = [&st, &a = a](const Output& out) {
      a.opts.init_method = a.init == "spa" ? InitMethod::Spa
                         : a.init == "random" ? InitMethod::Random
                                            : InitMethod::Provided;
      if (a.opts.init_method == InitMethod::Provided) {
        if (a.init_emission.empty()) throw UsageError("--init provided requires --init-emission");
        a.opts.initial_emission = io::read_matrix(a.init_emission);
      }
      const FitResult fit = sca_solve(read_omega(a.omega_path), a.k, a.opts);
      out.emit("emission.txt", io::format_matrix(fit.M.matrix()));
      out.emit("theta.txt", io::format_matrix(fit.Theta.matrix()));
      out.emit("transition.txt", io::format_matrix(transition_from_theta(fit.Theta).matrix()));
      out.emit("loss_trace.csv", loss_trace_csv(fit));
      out.emit("summary.csv",
               fmt::format("outer_iters,converged,stalled,final_loss\n{},{},{},{:.17g}\n",
                           fit.outer_iters, fit.converged ? 1 : 0, fit.stalled ? 1 : 0,
                           fit.loss_trace.back()));
    };
  }
  {
    auto& a = st.nmf;
    Command& c = add("nmf", "multiplicative-update tri-factorization baseline", true);
    c.app->add_option("--omega", a.omega_path, "co-occurrence matrix file")->required();
    c.app->add_option("--k", a.k, "hidden states")->required()->check(CLI::PositiveNumber);
    c.app->add_option("--iters", a.iters, "iterations")->check(CLI::NonNegativeNumber);
    c.app->add_option("--seed", a.seed, "random seed");
    c.inputs = {"--omega"};
    c.run = [&st, &a = a](const Output& out) {
      const NmfResult fit = nmf_baseline(read_omega(a.omega_path), a.k, a.seed, a.iters);
      out.emit("emission.txt", io::format_matrix(fit.M.matrix()));
      out.emit("joint.txt", io::format_matrix(fit.joint));
      out.emit("transition.txt", io::format_matrix(transition_from_joint(fit.joint).matrix()));
      std::string trace = "iter,kl\n";
      for (std::size_t i = 0; i < fit.kl_trace.size(); ++i) {
        trace += fmt::format("{},{:.17g}\n", i, fit.kl_trace[i]);
      }
      out.emit("kl_trace.csv", trace);
    };
  }

  // evaluate / experiment ----------------------------------------------------
  {
    auto& a = st.evaluate;
    Command& c = add("evaluate", "permutation-matched TV errors", false);
    c.app->add_option("--true-emission", a.true_m, "ground-truth emission file")->required();
    c.app->add_option("--est-emission", a.est_m, "estimated emission file")->required();
    c.app->add_option("--true-transition", a.true_p, "ground-truth transition file");
    c.app->add_option("--est-transition", a.est_p, "estimated transition file");
    c.inputs = {"--true-emission", "--est-emission", "--true-transition", "--est-transition"};
    c.run = [&st, &a = a](const Output& out) {
      if (a.true_p.empty() != a.est_p.empty()) {
        throw UsageError("give both --true-transition and --est-transition, or neither");
      }
      std::optional<Matrix> pt, pe;
      if (!a.true_p.empty()) {
        pt = io::read_matrix(a.true_p);
        pe = io::read_matrix(a.est_p);
      }
      const MatchResult r = match_permutation(io::read_matrix(a.true_m), io::read_matrix(a.est_m), pt, pe);
      std::string perm;
      for (std::size_t i = 0; i < r.permutation.size(); ++i) {
        perm += (i ? " " : "") + std::to_string(r.permutation[i]);
      }
      out.emit("evaluation.csv", fmt::format("emission_tv,transition_tv,permutation\n{:.6g},{:.6g},{}\n",
                                             r.emission_tv, r.transition_tv, perm));
    };
  }
  {
    auto& a = st.experiment;
    Command& c = add("experiment", "synthetic recovery sweep", true);
    c.app->add_option("--config", a.config_path, "key=value config file (overrides the flags below)");
    c.app->add_option("--n", a.n, "alphabet size")->check(CLI::PositiveNumber);
    c.app->add_option("--k", a.k, "hidden states")->check(CLI::PositiveNumber);
    c.app->add_option("--lengths", a.lengths, "comma-separated sequence lengths (0 = exact moments)");
    c.app->add_option("--seeds", a.seeds, "comma-separated seeds");
    c.app->add_option("--mode", a.mode, "emission generator")
        ->check(CLI::IsMember({"identity_top", "sparse50"}));
    c.app->add_option("--methods", a.methods, "comma-separated subset of proposed,nmf,baum_welch");
    c.app->add_option("--lambda", a.lambda, "determinant weight")->check(CLI::NonNegativeNumber);
    c.app->add_option("--nmf-iters", a.nmf_iters, "NMF iterations")->check(CLI::NonNegativeNumber);
    c.app->add_option("--baum-welch-iters", a.bw_iters, "Baum-Welch iterations")
        ->check(CLI::NonNegativeNumber);
    c.app->add_option("--timing", a.timing, "record wall time in the seconds column")
        ->check(CLI::IsMember({"on", "off"}));
    c.inputs = {"--config"};
    c.run = [&st, &a = a](const Output& out) {
      ExperimentConfig cfg;
      if (!a.config_path.empty()) {
        cfg = parse_experiment_config(io::read_file(a.config_path));
      } else {
        cfg.n = a.n;
        cfg.k = a.k;
        cfg.sequence_lengths = parse_u64_list(a.lengths);
        cfg.seeds = parse_u64_list(a.seeds);
        cfg.mode = parse_mode(a.mode);
        cfg.methods.clear();
        std::stringstream ss(a.methods);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.methods.push_back(method_from_string(item));
        cfg.lambda = a.lambda;
        cfg.nmf_iters = a.nmf_iters;
        cfg.baum_welch_iters = a.bw_iters;
        cfg.record_time = a.timing == "on";
      }
      cfg.threads = st.threads;
      out.emit("results.csv", experiment_csv(run_experiment(cfg)));
    };
  }

  // geometry -----------------------------------------------------------------
  {
    auto& a = st.volume;
    Command& c = add("volume-ratio", "inscribed-ball to simplex volume ratio per K", false);
    c.app->add_option("--k-max", a.k_max, "largest K")->check(CLI::Range(2, 1000000));
    c.run = [&st, &a = a](const Output& out) {
      std::vector<std::string> rows;
      for (int k = 2; k <= a.k_max; ++k) rows.push_back(fmt::format("{},{:.6g}", k, volume_ratio(k)));
      out.emit("volume_ratio.csv", csv_header_and_rows("K,ratio", rows));
    };
  }
  {
    auto& a = st.scatter;
    Command& c = add("check-scattered", "necessary scattering condition and separability", false);
    c.app->add_option("--emission", a.emission_path, "emission matrix file")->required();
    c.app->add_option("--zero-tol", a.zero_tol, "entries below this count as zero")
        ->check(CLI::NonNegativeNumber);
    c.inputs = {"--emission"};
    c.run = [&st, &a = a](const Output& out) {
      const ScatterReport r = check_scattered_necessary(EmissionMatrix(io::read_matrix(a.emission_path)), a.zero_tol);
      std::string counts;
      for (std::size_t i = 0; i < r.column_zero_counts.size(); ++i) {
        counts += (i ? " " : "") + std::to_string(r.column_zero_counts[i]);
      }
      out.emit("scatter.csv", fmt::format("passes_necessary,separable,min_required,column_zero_counts\n{},{},{},{}\n",
                                          r.passes_necessary ? 1 : 0, r.separable ? 1 : 0,
                                          r.min_required, counts));
    };
  }

  // htmm ---------------------------------------------------------------------
  auto corpus_options = [&](Command& c) {
    c.app->add_option("--corpus", st.corpus_path, "corpus file, one document per line")->required();
    c.app->add_option("--vocab", st.vocab_path, "vocabulary file, one token per line");
    c.inputs.insert({"--corpus", "--vocab"});
  };
  {
    auto& a = st.train;
    Command& c = add("htmm-train", "learn shared topics and per-document transitions", true);
    corpus_options(c);
    c.app->add_option("--k", a.k, "topics")->required()->check(CLI::PositiveNumber);
    c.app->add_option("--lambda", a.opts.solver.lambda, "determinant weight")->check(CLI::NonNegativeNumber);
    c.app->add_option("--max-iters", a.opts.solver.max_outer_iters, "outer iteration cap")
        ->check(CLI::NonNegativeNumber);
    c.app->add_option("--tol", a.opts.solver.outer_tol, "relative loss-decrease threshold")
        ->check(CLI::PositiveNumber);
    c.app->add_option("--seed", a.opts.solver.seed, "seed");
    c.run = [&st, &a = a](const Output& out) {
      const Corpus corpus = load_corpus(st);
      a.opts.threads = st.threads;
      save_model(out.dir(), fit_topics(corpus, a.k, a.opts), corpus.vocab);
    };
  }
  auto model_option = [&](Command& c) {
    c.app->add_option("--model", st.model_dir, "model directory from htmm-train")->required();
    c.inputs.insert("--model");
  };
  {
    auto& a = st.infer;
    Command& c = add("htmm-infer", "Viterbi topic of every word in a document", false);
    corpus_options(c);
    model_option(c);
    c.app->add_option("--doc", a.doc, "document index (0-based)")->required();
    c.run = [&st, &a = a](const Output& out) {
      const Corpus corpus = load_corpus(st);
      const TopicModel model = load_model(st.model_dir);
      const auto path = infer_topics(model, corpus, a.doc);
      std::vector<std::string> rows;
      for (std::size_t t = 0; t < path.size(); ++t) {
        rows.push_back(fmt::format("{},{},{}", t, corpus.vocab[static_cast<std::size_t>(corpus.documents[a.doc][t])], path[t]));
      }
      out.emit("topics.csv", csv_header_and_rows("position,word,topic", rows));
    };
  }
  {
    auto& a = st.coh;
    Command& c = add("coherence", "document co-frequency coherence of topics", false);
    corpus_options(c);
    c.app->add_option("--model", st.model_dir, "model directory from htmm-train");
    c.app->add_option("--topics", a.topics_path, "topic (emission) matrix file instead of --model");
    c.app->add_option("--top-m", a.top_m, "top words per topic")->check(CLI::PositiveNumber);
    c.app->add_option("--eps", a.eps, "smoothing")->check(CLI::PositiveNumber);
    c.inputs.insert({"--model", "--topics"});
    c.run = [&st, &a = a](const Output& out) {
      if (st.model_dir.empty() == a.topics_path.empty()) throw UsageError("give exactly one of --model or --topics");
      const Corpus corpus = load_corpus(st);
      const Matrix topics = a.topics_path.empty() ? load_model(st.model_dir).topics.matrix()
                                                : io::read_matrix(a.topics_path);
      const CoherenceResult r = coherence(topics, DocumentFrequencyIndex(corpus), a.top_m, a.eps);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      std::vector<std::string> rows;
      for (std::size_t i = 0; i < r.per_topic.size(); ++i) rows.push_back(fmt::format("{},{:.6g}", i, r.per_topic[i]));
      rows.push_back(fmt::format("mean,{:.6g}", r.mean));
      out.emit("coherence.csv", csv_header_and_rows("topic,coherence", rows));
    };
  }
  {
    Command& c = add("perplexity", "per-token perplexity of a corpus under a model", false);
    corpus_options(c);
    model_option(c);
    c.run = [&st](const Output& out) {
      const PerplexityResult r = perplexity(load_model(st.model_dir), load_corpus(st));
      if (r.impossible_document) {
        std::cerr << "warning: document " << *r.impossible_document << " has zero likelihood\n";
      }
      out.emit("perplexity.csv", fmt::format("perplexity,log_likelihood\n{:.6g},{:.6g}\n", r.value, r.log_likelihood));
    };
  }
  return cmds;
}

json collect_options(const CLI::App& sub, const std::set<std::string>& skip) {
  json opts = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name.rfind("--", 0) != 0 || skip.count(name)) continue;
    std::string value;
    if (opt->count() > 0) {
      value = opt->results().back();
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty()) opts[name] = value;
  }
  return opts;
}

int execute(const std::vector<std::string>& args) {
  CLI::App app{"pairhmm: HMM identification from pairwise co-occurrences"};
  app.set_version_flag("--version", kVersion);
  CliState st;
  auto cmds = build_commands(app, st);

  std::string manifest_path, rerun_out;
  CLI::App* rerun = app.add_subcommand("rerun", "replay a run from its manifest.json");
  rerun->add_option("--manifest", manifest_path, "manifest.json of a previous run")->required();
  rerun->add_option("--out", rerun_out, "output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (rerun->parsed()) {
    const json manifest = json::parse(io::read_file(manifest_path));
    std::vector<std::string> replay{args.front(), manifest.at("subcommand").get<std::string>()};
    for (const auto& [flag, value] : manifest.at("options").items()) {
      replay.push_back(flag);
      replay.push_back(value.get<std::string>());
    }
    for (const auto& [flag, entry] : manifest.at("inputs").items()) {
      const std::string now = digest_path(entry.at("path").get<std::string>());
      if (now != entry.at("sha256").get<std::string>()) {
        throw Error(ErrorCode::IoError, fmt::format("input {} ({}) changed since the manifest was written",
                                                    flag, entry.at("path").get<std::string>()));
      }
    }
    replay.push_back("--out");
    replay.push_back(rerun_out);
    return execute(replay);
  }

  for (auto& [name, cmd] : cmds) {
    if (!cmd.app->parsed()) continue;
    const Output out(st.out_dir ? std::optional<fs::path>(*st.out_dir) : std::nullopt);
    json manifest;
    manifest["tool"] = "pairhmm";
    manifest["version"] = kVersion;
    manifest["subcommand"] = name;
    manifest["options"] = collect_options(*cmd.app, {"--out", "--help"});
    manifest["seed"] = manifest["options"].contains("--seed") ? manifest["options"]["--seed"] : json();
    json inputs = json::object();
    for (const auto& flag : cmd.inputs) {
      const auto& o = manifest["options"];
      if (o.contains(flag)) {
        const std::string p = o[flag].get<std::string>();
        inputs[flag] = {{"path", p}, {"sha256", digest_path(p)}};
      }
    }
    manifest["inputs"] = inputs;
    cmd.run(out);
    if (out.has_dir()) io::write_file(out.dir() / "manifest.json", manifest.dump(2) + "\n");
    return 0;
  }
  return 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return execute(args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

int main(int argc, char** argv) { return run_cli(argc, argv); }
