#include "pairhmm/matrix_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "pairhmm/error.hpp"

namespace pairhmm::io {
namespace {

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : in_(text), origin_(std::move(origin)) {}

  // Next non-blank line split into tokens; false at end of input.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ls(line);
      tokens.clear();
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", origin_, line_no_, what));
  }

  double to_double(const std::string& s) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail(fmt::format("bad number '{}'", s));
      return v;
    } catch (const std::logic_error&) {
      fail(fmt::format("bad number '{}'", s));
    }
  }

  Index to_index(const std::string& s) const {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size() || v < 0) fail(fmt::format("bad size '{}'", s));
      return static_cast<Index>(v);
    } catch (const std::logic_error&) {
      fail(fmt::format("bad size '{}'", s));
    }
  }

  std::vector<Index> header(std::size_t arity) {
    std::vector<std::string> tokens;
    if (!next(tokens)) fail("missing header");
    if (tokens.size() != arity) fail(fmt::format("header needs {} sizes", arity));
    std::vector<Index> dims;
    for (const auto& t : tokens) dims.push_back(to_index(t));
    return dims;
  }

  Matrix block(Index rows, Index cols) {
    Matrix m(rows, cols);
    std::vector<std::string> tokens;
    for (Index i = 0; i < rows; ++i) {
      if (!next(tokens)) fail(fmt::format("expected {} rows, found {}", rows, i));
      if (static_cast<Index>(tokens.size()) != cols) {
        fail(fmt::format("expected {} values, found {}", cols, tokens.size()));
      }
      for (Index j = 0; j < cols; ++j) m(i, j) = to_double(tokens[static_cast<std::size_t>(j)]);
    }
    return m;
  }

  void expect_end() {
    std::vector<std::string> tokens;
    if (next(tokens)) fail("trailing data");
  }

 private:
  std::istringstream in_;
  std::string origin_;
  int line_no_ = 0;
};

void append_rows(std::string& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ' ';
      out += fmt::format("{:.17g}", m(i, j));
    }
    out += '\n';
  }
}

}  // namespace

std::string format_matrix(const Matrix& m) {
  std::string out = fmt::format("{} {}\n", m.rows(), m.cols());
  append_rows(out, m);
  return out;
}

Matrix parse_matrix(const std::string& text, const std::string& origin) {
  Reader r(text, origin);
  const auto dims = r.header(2);
  Matrix m = r.block(dims[0], dims[1]);
  r.expect_end();
  return m;
}

std::string format_tensor(const TripleTensor& t) {
  const Index n = t.symbols();
  std::string out = fmt::format("{} {} {}\n", n, n, n);
  for (Index s = 0; s < n; ++s) append_rows(out, t.slice(s));
  return out;
}

TripleTensor parse_tensor(const std::string& text, const std::string& origin) {
  Reader r(text, origin);
  const auto dims = r.header(3);
  if (dims[0] != dims[1] || dims[1] != dims[2]) r.fail("tensor header must be 'N N N'");
  std::vector<Matrix> slices;
  for (Index s = 0; s < dims[0]; ++s) slices.push_back(r.block(dims[0], dims[0]));
  r.expect_end();
  return TripleTensor(std::move(slices));
}

std::string format_matrix_stack(const std::vector<Matrix>& stack) {
  const Index k = stack.empty() ? 0 : stack.front().rows();
  std::string out = fmt::format("{} {} {}\n", stack.size(), k, k);
  for (const auto& m : stack) {
    if (m.rows() != k || m.cols() != k) {
      throw Error(ErrorCode::DimensionMismatch, "matrix stack entries must share one K x K shape");
    }
    append_rows(out, m);
  }
  return out;
}

std::vector<Matrix> parse_matrix_stack(const std::string& text, const std::string& origin) {
  Reader r(text, origin);
  const auto dims = r.header(3);
  if (dims[1] != dims[2]) r.fail("stack header must be 'D K K'");
  std::vector<Matrix> out;
  for (Index d = 0; d < dims[0]; ++d) out.push_back(r.block(dims[1], dims[1]));
  r.expect_end();
  return out;
}

std::string format_sequences(const std::vector<ObservationSequence>& seqs) {
  std::string out;
  for (const auto& seq : seqs) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (t > 0) out += ' ';
      out += std::to_string(seq[t]);
    }
    out += '\n';
  }
  return out;
}

std::vector<ObservationSequence> parse_sequences(const std::string& text,
                                                 const std::string& origin) {
  Reader r(text, origin);
  std::vector<ObservationSequence> out;
  std::vector<std::string> tokens;
  while (r.next(tokens)) {
    ObservationSequence seq;
    seq.reserve(tokens.size());
    for (const auto& t : tokens) seq.push_back(static_cast<int>(r.to_index(t)));
    out.push_back(std::move(seq));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << contents;
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for '{}'", path.string()));
}

Matrix read_matrix(const std::filesystem::path& path) {
  return parse_matrix(read_file(path), path.string());
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_file(path, format_matrix(m));
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace pairhmm::io
