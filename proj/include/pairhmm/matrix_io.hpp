#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pairhmm/types.hpp"

namespace pairhmm::io {

// Matrix text format: header line "rows cols", then one whitespace-separated
// row per line. Values are written with 17 significant digits so a
// write/read round trip is exact.
std::string format_matrix(const Matrix& m);
Matrix parse_matrix(const std::string& text, const std::string& origin = "<string>");

// Tensor format: header "N N N", then N blocks of N x N rows.
std::string format_tensor(const TripleTensor& t);
TripleTensor parse_tensor(const std::string& text, const std::string& origin = "<string>");

// Stack of equally shaped square matrices: header "D K K", then D blocks.
std::string format_matrix_stack(const std::vector<Matrix>& stack);
std::vector<Matrix> parse_matrix_stack(const std::string& text,
                                       const std::string& origin = "<string>");

// Observation sequences: one sequence per line, whitespace-separated ids.
std::string format_sequences(const std::vector<ObservationSequence>& seqs);
std::vector<ObservationSequence> parse_sequences(const std::string& text,
                                                 const std::string& origin = "<string>");

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace pairhmm::io
