#include "saddle/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <new>
#include <optional>
#include <ostream>
#include <string>

namespace saddle::io {

namespace {

// Largest dimension accepted from a file header.
constexpr Index max_dimension = Index(1) << 36;

[[noreturn]] void parse_error(std::size_t line, const std::string &what) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<Index> to_index(std::string_view s) {
    Index v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> to_real(std::string_view s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Line reader that skips blank and comment lines after the banner.
class Reader {
  public:
    explicit Reader(std::istream &in) : in_(in) {}

    MtxHeader header() {
        std::string line;
        if (!std::getline(in_, line)) parse_error(1, "empty input");
        line_ = 1;
        return parse_header(line);
    }

    bool next(std::vector<std::string_view> &toks) {
        while (std::getline(in_, buf_)) {
            ++line_;
            auto t = tokens(buf_);
            if (t.empty() || t.front().front() == '%') continue;
            toks = std::move(t);
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }

  private:
    std::istream &in_;
    std::string buf_;
    std::size_t line_ = 0;
};

std::ifstream open_in(const std::filesystem::path &path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::IoError, "cannot open " + path.string());
    return f;
}

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream f(path);
    if (!f) fail(ErrorKind::IoError, "cannot create " + path.string());
    return f;
}

void put_real(std::ostream &out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

} // namespace

MtxHeader parse_header(std::string_view line) {
    auto t = tokens(line);
    if (t.size() != 5 || t[0] != "%%MatrixMarket") parse_error(1, "missing %%MatrixMarket banner");
    if (lower(t[1]) != "matrix") parse_error(1, "only matrix objects are supported");

    MtxHeader h;
    const auto fmt = lower(t[2]), field = lower(t[3]), sym = lower(t[4]);

    if (fmt == "coordinate") h.format = MtxHeader::Format::Coordinate;
    else if (fmt == "array") h.format = MtxHeader::Format::Array;
    else parse_error(1, "unknown format '" + fmt + "'");

    if (field == "real" || field == "double") h.field = MtxHeader::Field::Real;
    else if (field == "integer") h.field = MtxHeader::Field::Integer;
    else if (field == "pattern" || field == "complex")
        fail(ErrorKind::UnsupportedField, "field '" + field + "' is not supported");
    else parse_error(1, "unknown field '" + field + "'");

    if (sym == "general") h.symmetry = MtxHeader::Symmetry::General;
    else if (sym == "symmetric") h.symmetry = MtxHeader::Symmetry::Symmetric;
    else if (sym == "hermitian" || sym == "skew-symmetric")
        fail(ErrorKind::UnsupportedField, "symmetry '" + sym + "' is not supported");
    else parse_error(1, "unknown symmetry '" + sym + "'");
    return h;
}

CsrMatrix<double> read_matrix(std::istream &in) {
    Reader rd(in);
    const auto h = rd.header();
    if (h.format != MtxHeader::Format::Coordinate) parse_error(1, "matrices must use coordinate format");

    std::vector<std::string_view> t;
    if (!rd.next(t)) parse_error(rd.line(), "missing size line");
    if (t.size() != 3) parse_error(rd.line(), "size line must have three fields");
    auto n = to_index(t[0]), m = to_index(t[1]), nnz = to_index(t[2]);
    if (!n || !m || !nnz) parse_error(rd.line(), "malformed size line");
    if (*n == 0 || *m == 0 || *n > max_dimension || *m > max_dimension)
        parse_error(rd.line(), "matrix dimensions out of range");
    if (h.symmetry == MtxHeader::Symmetry::Symmetric && *n != *m)
        parse_error(rd.line(), "symmetric matrix must be square");

    std::vector<Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(std::min<Index>(*nnz, Index(1) << 22)));
    for (Index k = 0; k < *nnz; ++k) {
        if (!rd.next(t)) parse_error(rd.line(), "unexpected end of file after " + std::to_string(k) + " entries");
        if (t.size() != 3) parse_error(rd.line(), "entry must have three fields");
        auto i = to_index(t[0]), j = to_index(t[1]);
        auto v = to_real(t[2]);
        if (!i || !j || !v) parse_error(rd.line(), "malformed entry");
        if (*i < 1 || *i > *n || *j < 1 || *j > *m) parse_error(rd.line(), "entry index out of range");
        trip.push_back({*i - 1, *j - 1, *v});
        if (h.symmetry == MtxHeader::Symmetry::Symmetric && *i != *j) trip.push_back({*j - 1, *i - 1, *v});
    }
    if (rd.next(t)) parse_error(rd.line(), "trailing data after the declared entries");

    try {
        return build_csr<double>(*n, *m, trip);
    } catch (const std::bad_alloc &) {
        fail(ErrorKind::ParseError, "matrix too large");
    }
}

CsrMatrix<double> read_matrix(const std::filesystem::path &path) {
    auto f = open_in(path);
    return read_matrix(f);
}

void write_matrix(std::ostream &out, const CsrMatrix<double> &A) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
            out << i + 1 << ' ' << A.col()[j] + 1 << ' ';
            put_real(out, A.val()[j]);
            out << '\n';
        }
    if (!out) fail(ErrorKind::IoError, "write failed");
}

void write_matrix(const std::filesystem::path &path, const CsrMatrix<double> &A) {
    auto f = open_out(path);
    write_matrix(f, A);
}

std::vector<double> read_vector(std::istream &in) {
    Reader rd(in);
    const auto h = rd.header();
    if (h.format != MtxHeader::Format::Array) parse_error(1, "vectors must use array format");
    if (h.symmetry != MtxHeader::Symmetry::General) parse_error(1, "vectors must be general");

    std::vector<std::string_view> t;
    if (!rd.next(t)) parse_error(rd.line(), "missing size line");
    if (t.size() != 2) parse_error(rd.line(), "size line must have two fields");
    auto n = to_index(t[0]), m = to_index(t[1]);
    if (!n || !m) parse_error(rd.line(), "malformed size line");
    if (*n == 0 || *n > max_dimension) parse_error(rd.line(), "vector dimension out of range");
    if (*m != 1) parse_error(rd.line(), "vectors must have exactly one column");

    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(std::min<Index>(*n, Index(1) << 22)));
    for (Index k = 0; k < *n; ++k) {
        if (!rd.next(t)) parse_error(rd.line(), "unexpected end of file after " + std::to_string(k) + " entries");
        if (t.size() != 1) parse_error(rd.line(), "array entry must have one field");
        auto x = to_real(t[0]);
        if (!x) parse_error(rd.line(), "malformed value");
        v.push_back(*x);
    }
    if (rd.next(t)) parse_error(rd.line(), "trailing data after the declared entries");
    return v;
}

std::vector<double> read_vector(const std::filesystem::path &path) {
    auto f = open_in(path);
    return read_vector(f);
}

void write_vector(std::ostream &out, const std::vector<double> &v) {
    out << "%%MatrixMarket matrix array real general\n";
    out << v.size() << " 1\n";
    for (double x : v) {
        put_real(out, x);
        out << '\n';
    }
    if (!out) fail(ErrorKind::IoError, "write failed");
}

void write_vector(const std::filesystem::path &path, const std::vector<double> &v) {
    auto f = open_out(path);
    write_vector(f, v);
}

std::vector<bool> read_mask(const std::filesystem::path &path) {
    const auto v = read_vector(path);
    std::vector<bool> mask(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0 && v[i] != 1.0) fail(ErrorKind::ParseError, "mask entries must be 0 or 1");
        mask[i] = v[i] != 0.0;
    }
    return mask;
}

void write_mask(const std::filesystem::path &path, const std::vector<bool> &mask) {
    std::vector<double> v(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 1.0 : 0.0;
    write_vector(path, v);
}

} // namespace saddle::io
