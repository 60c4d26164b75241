#include "pairhmm/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "pairhmm/error.hpp"
#include "pairhmm/hmm_core.hpp"
#include "pairhmm/rng.hpp"
#include "pairhmm/solver.hpp"
#include "pairhmm/stats.hpp"

namespace pairhmm {
namespace {

constexpr std::uint64_t kEmissionStream = 1;
constexpr std::uint64_t kTransitionStream = 2;
constexpr std::uint64_t kSampleStream = 3;
constexpr std::uint64_t kFitStream = 4;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Cell {
  std::uint64_t seed;
  std::uint64_t length;
};

std::vector<ExperimentRow> run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  const EmissionMatrix m_true =
      generate_scattered_emission(cfg.n, cfg.k, cfg.mode, derive_seed(cell.seed, kEmissionStream));
  const TransitionMatrix p_true =
      generate_random_transition(cfg.k, derive_seed(cell.seed, kTransitionStream));
  const Hmm hmm(p_true, m_true, stationary_distribution(p_true));

  ObservationSequence seq;
  std::optional<CooccurrenceMatrix> omega;
  if (cell.length == 0) {
    omega = exact_pairwise(hmm);
  } else {
    seq = sample_sequence(hmm, static_cast<std::size_t>(cell.length),
                          derive_seed(derive_seed(cell.seed, kSampleStream), cell.length));
    omega = estimate_pairwise(seq, cfg.n);
  }

  std::vector<ExperimentRow> rows;
  for (Method method : cfg.methods) {
    const auto start = std::chrono::steady_clock::now();
    Matrix m_est;
    Matrix p_est;
    switch (method) {
      case Method::Proposed: {
        SolverOptions opts;
        opts.lambda = cfg.lambda;
        opts.seed = derive_seed(cell.seed, kFitStream);
        const FitResult fit = sca_solve(*omega, cfg.k, opts);
        m_est = fit.M.matrix();
        p_est = transition_from_theta(fit.Theta).matrix();
        break;
      }
      case Method::Nmf: {
        const NmfResult fit =
            nmf_baseline(*omega, cfg.k, derive_seed(cell.seed, kFitStream), cfg.nmf_iters);
        m_est = fit.M.matrix();
        p_est = transition_from_joint(fit.joint).matrix();
        break;
      }
      case Method::BaumWelch: {
        if (cell.length == 0) {
          throw Error(ErrorCode::InvalidArgument, "Baum-Welch needs sampled sequences (T > 0)");
        }
        BaumWelchOptions bw;
        bw.states = cfg.k;
        bw.seed = derive_seed(cell.seed, kFitStream);
        bw.max_iters = cfg.baum_welch_iters;
        bw.symbols = cfg.n;
        const BaumWelchResult fit = baum_welch({seq}, bw);
        m_est = fit.hmm.emission.matrix();
        p_est = fit.hmm.transition.matrix();
        break;
      }
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const MatchResult match = match_permutation(m_true.matrix(), m_est, p_true.matrix(), p_est);
    rows.push_back({method, cell.seed, cell.length, match.emission_tv, match.transition_tv,
                    cfg.record_time ? seconds : 0.0});
  }
  return rows;
}

}  // namespace

std::vector<int> solve_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw Error(ErrorCode::DimensionMismatch, "cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); 1-based with column 0 as the sentinel.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> owner(static_cast<std::size_t>(n + 1), 0);
  std::vector<Index> way(static_cast<std::size_t>(n + 1), 0);
  for (Index row = 1; row <= n; ++row) {
    owner[0] = row;
    Index col0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(col0)] = true;
      const Index row0 = owner[static_cast<std::size_t>(col0)];
      double delta = kInf;
      Index col1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(row0 - 1, j - 1) - u[static_cast<std::size_t>(row0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = col0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          col1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(owner[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      col0 = col1;
    } while (owner[static_cast<std::size_t>(col0)] != 0);
    do {
      const Index col1 = way[static_cast<std::size_t>(col0)];
      owner[static_cast<std::size_t>(col0)] = owner[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) {
    assignment[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)] - 1)] =
        static_cast<int>(j - 1);
  }
  return assignment;
}

MatchResult match_permutation(const Matrix& m_true, const Matrix& m_est,
                              const std::optional<Matrix>& p_true,
                              const std::optional<Matrix>& p_est) {
  if (m_true.rows() != m_est.rows() || m_true.cols() != m_est.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("emission shapes differ: {}x{} vs {}x{}", m_true.rows(),
                            m_true.cols(), m_est.rows(), m_est.cols()));
  }
  const Index k = m_true.cols();
  Matrix cost(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) cost(a, b) = 0.5 * (m_true.col(a) - m_est.col(b)).lpNorm<1>();

  MatchResult out;
  out.permutation = solve_assignment(cost);
  double total = 0.0;
  for (Index a = 0; a < k; ++a) total += cost(a, out.permutation[static_cast<std::size_t>(a)]);
  out.emission_tv = total / static_cast<double>(k);

  if (p_true.has_value() != p_est.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "supply both transitions or neither");
  }
  if (p_true) {
    if (p_true->rows() != k || p_true->cols() != k || p_est->rows() != k || p_est->cols() != k) {
      throw Error(ErrorCode::DimensionMismatch, "transition matrices must be K x K");
    }
    const Matrix pt = normalize_rows(*p_true);
    const Matrix pe = normalize_rows(*p_est);
    double acc = 0.0;
    for (Index a = 0; a < k; ++a) {
      const Index ra = out.permutation[static_cast<std::size_t>(a)];
      double row = 0.0;
      for (Index b = 0; b < k; ++b) {
        row += std::abs(pt(a, b) - pe(ra, out.permutation[static_cast<std::size_t>(b)]));
      }
      acc += 0.5 * row;
    }
    out.transition_tv = acc / static_cast<double>(k);
  }
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Proposed: return "proposed";
    case Method::Nmf: return "nmf";
    case Method::BaumWelch: return "baum_welch";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "proposed") return Method::Proposed;
  if (s == "nmf") return Method::Nmf;
  if (s == "baum_welch") return Method::BaumWelch;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown method '{}'", s));
}

void ExperimentConfig::validate() const {
  if (k < 1 || n < k) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("need N >= K >= 1, got N={} K={}", n, k));
  }
  if (sequence_lengths.empty() || seeds.empty() || methods.empty()) {
    throw Error(ErrorCode::InvalidArgument, "lengths, seeds and methods must be non-empty");
  }
  for (auto t : sequence_lengths) {
    if (t == 1) throw Error(ErrorCode::InvalidArgument, "sequence length must be >= 2 (or 0)");
    if (t == 0 && std::find(methods.begin(), methods.end(), Method::BaumWelch) != methods.end()) {
      throw Error(ErrorCode::InvalidArgument, "baum_welch needs sampled sequences; drop length 0");
    }
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<Cell> cells;
  for (auto seed : cfg.seeds)
    for (auto len : cfg.sequence_lengths) cells.push_back({seed, len});

  std::vector<std::vector<ExperimentRow>> results(cells.size());
  const auto workers = static_cast<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), cells.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(cfg, cells[i]);
  } else {
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
            if (next >= cells.size() || failure) return;
            i = next++;
          }
          try {
            results[i] = run_cell(cfg, cells[i]);
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

  std::vector<ExperimentRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  std::sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    return std::tie(a.method, a.seed, a.length) < std::tie(b.method, b.seed, b.length);
  });
  return rows;
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "method,seed,T,emission_tv,transition_tv,seconds\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.6g},{:.6g},{:.6g}\n", to_string(r.method), r.seed, r.length,
                       r.emission_tv, r.transition_tv, r.seconds);
  }
  return out;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  auto parse_u64_list = [&](const std::string& v) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(v)) out.push_back(std::stoull(item));
    return out;
  };
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, fmt::format("line {}: expected key=value", line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "N") {
        cfg.n = std::stoi(value);
      } else if (key == "K") {
        cfg.k = std::stoi(value);
      } else if (key == "lengths") {
        cfg.sequence_lengths = parse_u64_list(value);
      } else if (key == "seeds") {
        cfg.seeds = parse_u64_list(value);
      } else if (key == "mode") {
        if (value == "sparse50") cfg.mode = EmissionMode::Sparse50;
        else if (value == "identity_top") cfg.mode = EmissionMode::IdentityTop;
        else throw Error(ErrorCode::ParseError, fmt::format("unknown mode '{}'", value));
      } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& item : split_list(value)) cfg.methods.push_back(method_from_string(item));
      } else if (key == "lambda") {
        cfg.lambda = std::stod(value);
      } else if (key == "nmf_iters") {
        cfg.nmf_iters = std::stoi(value);
      } else if (key == "baum_welch_iters") {
        cfg.baum_welch_iters = std::stoi(value);
      } else if (key == "timing") {
        if (value != "on" && value != "off") {
          throw Error(ErrorCode::ParseError, "timing must be 'on' or 'off'");
        }
        cfg.record_time = value == "on";
      } else if (key == "threads") {
        cfg.threads = std::stoi(value);
      } else {
        throw Error(ErrorCode::ParseError, fmt::format("unknown key '{}'", key));
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("line {}: bad value '{}' for {}", line_no, value, key));
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace pairhmm
