#pragma once

// MatrixMarket exchange format: coordinate real matrices (general or
// symmetric) and array real vectors.

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "saddle/sparse.hpp"

namespace saddle::io {

struct MtxHeader {
    enum class Format { Coordinate, Array };
    enum class Field { Real, Integer };
    enum class Symmetry { General, Symmetric };

    Format format = Format::Coordinate;
    Field field = Field::Real;
    Symmetry symmetry = Symmetry::General;
};

/// Parses the `%%MatrixMarket ...` banner. Throws ParseError on a malformed
/// banner and UnsupportedField for pattern/complex/hermitian files.
MtxHeader parse_header(std::string_view line);

CsrMatrix<double> read_matrix(std::istream &in);
CsrMatrix<double> read_matrix(const std::filesystem::path &path);

void write_matrix(std::ostream &out, const CsrMatrix<double> &A);
void write_matrix(const std::filesystem::path &path, const CsrMatrix<double> &A);

std::vector<double> read_vector(std::istream &in);
std::vector<double> read_vector(const std::filesystem::path &path);

void write_vector(std::ostream &out, const std::vector<double> &v);
void write_vector(const std::filesystem::path &path, const std::vector<double> &v);

/// Reads a 0/1 array vector as a boolean mask.
std::vector<bool> read_mask(const std::filesystem::path &path);
void write_mask(const std::filesystem::path &path, const std::vector<bool> &mask);

} // namespace saddle::io
