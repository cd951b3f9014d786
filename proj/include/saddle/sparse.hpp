#pragma once

// Compressed sparse row container generic over the value type, and the
// structural operations on it (transpose, products, block conversion,
// precision conversion, masked extraction, storage accounting).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saddle/error.hpp"
#include "saddle/values.hpp"

namespace saddle {

using Index = std::uint64_t;

template <typename V>
struct Triplet {
    Index row;
    Index col;
    V value;
};

/// Byte counts of the arrays owned by a component.
struct Footprint {
    std::size_t index = 0;  ///< row pointers, column indices, permutations
    std::size_t values = 0; ///< matrix values and work vectors

    std::size_t total() const { return index + values; }

    Footprint &operator+=(const Footprint &o) {
        index += o.index;
        values += o.values;
        return *this;
    }
    friend Footprint operator+(Footprint a, const Footprint &b) { return a += b; }
};

struct MatrixBytes {
    std::size_t ptr = 0;
    std::size_t col = 0;
    std::size_t val = 0;

    std::size_t total() const { return ptr + col + val; }
    Footprint footprint() const { return {ptr + col, val}; }
};

template <typename V>
Footprint vector_footprint(const std::vector<V> &v) {
    return {0, v.size() * sizeof(V)};
}

/// Immutable CSR matrix. Rows are sorted with strictly increasing column
/// indices and all stored values are finite.
template <typename V>
class CsrMatrix {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;
    using scalar_type = math::scalar_of<V>;

    CsrMatrix() : ptr_(1, 0) {}

    CsrMatrix(Index nrows, Index ncols, std::vector<Index> ptr, std::vector<Index> col, std::vector<V> val)
        : nrows_(nrows), ncols_(ncols), ptr_(std::move(ptr)), col_(std::move(col)), val_(std::move(val)) {
        validate();
    }

    static CsrMatrix identity(Index n) {
        std::vector<Index> ptr(n + 1), col(n);
        std::iota(ptr.begin(), ptr.end(), Index(0));
        std::iota(col.begin(), col.end(), Index(0));
        return CsrMatrix(n, n, std::move(ptr), std::move(col), std::vector<V>(n, math::identity<V>()));
    }

    Index rows() const { return nrows_; }
    Index cols() const { return ncols_; }
    Index nnz() const { return ptr_.back(); }

    const std::vector<Index> &ptr() const { return ptr_; }
    const std::vector<Index> &col() const { return col_; }
    const std::vector<V> &val() const { return val_; }

    Index row_begin(Index i) const { return ptr_[i]; }
    Index row_end(Index i) const { return ptr_[i + 1]; }

    /// Stored value at (i, j), or zero when the position is not stored.
    V at(Index i, Index j) const {
        auto b = col_.begin() + static_cast<std::ptrdiff_t>(ptr_[i]);
        auto e = col_.begin() + static_cast<std::ptrdiff_t>(ptr_[i + 1]);
        auto it = std::lower_bound(b, e, j);
        if (it != e && *it == j) return val_[static_cast<std::size_t>(it - col_.begin())];
        return math::zero<V>();
    }

    MatrixBytes bytes() const {
        return {ptr_.size() * sizeof(Index), col_.size() * sizeof(Index), val_.size() * sizeof(V)};
    }

  private:
    void validate() const {
        precondition(ptr_.size() == nrows_ + 1, ErrorKind::DimensionMismatch, "ptr length must be nrows + 1");
        precondition(ptr_.front() == 0, ErrorKind::InvalidArgument, "ptr[0] must be zero");
        precondition(col_.size() == ptr_.back() && val_.size() == ptr_.back(), ErrorKind::DimensionMismatch,
                     "col/val length must equal ptr[nrows]");
        for (Index i = 0; i < nrows_; ++i) {
            precondition(ptr_[i] <= ptr_[i + 1], ErrorKind::InvalidArgument, "ptr must be non-decreasing");
            for (Index j = ptr_[i]; j < ptr_[i + 1]; ++j) {
                precondition(col_[j] < ncols_, ErrorKind::IndexOutOfRange, "column index out of range");
                precondition(j == ptr_[i] || col_[j - 1] < col_[j], ErrorKind::InvalidArgument,
                             "columns must be strictly increasing within a row");
                precondition(math::is_finite(val_[j]), ErrorKind::InvalidArgument, "non-finite matrix value");
            }
        }
    }

    Index nrows_ = 0;
    Index ncols_ = 0;
    std::vector<Index> ptr_;
    std::vector<Index> col_;
    std::vector<V> val_;
};

/// Builds a CSR matrix from unordered triplets. Duplicates are summed.
template <typename V>
CsrMatrix<V> build_csr(Index nrows, Index ncols, std::span<const Triplet<V>> triplets) {
    std::vector<Index> ptr(nrows + 1, 0);
    for (const auto &t : triplets) {
        if (t.row >= nrows || t.col >= ncols) fail(ErrorKind::IndexOutOfRange, "triplet index out of range");
        ++ptr[t.row + 1];
    }
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());

    std::vector<Index> order(triplets.size());
    {
        std::vector<Index> pos(ptr.begin(), ptr.end() - 1);
        for (Index k = 0; k < triplets.size(); ++k) order[pos[triplets[k].row]++] = k;
    }

    std::vector<Index> out_ptr(nrows + 1, 0), col;
    std::vector<V> val;
    col.reserve(triplets.size());
    val.reserve(triplets.size());
    for (Index i = 0; i < nrows; ++i) {
        auto b = order.begin() + static_cast<std::ptrdiff_t>(ptr[i]);
        auto e = order.begin() + static_cast<std::ptrdiff_t>(ptr[i + 1]);
        std::stable_sort(b, e, [&](Index a, Index c) { return triplets[a].col < triplets[c].col; });
        for (auto it = b; it != e; ++it) {
            const auto &t = triplets[*it];
            if (col.size() > out_ptr[i] && col.back() == t.col) val.back() += t.value;
            else {
                col.push_back(t.col);
                val.push_back(t.value);
            }
        }
        out_ptr[i + 1] = col.size();
    }
    return CsrMatrix<V>(nrows, ncols, std::move(out_ptr), std::move(col), std::move(val));
}

template <typename V>
CsrMatrix<V> build_csr(Index nrows, Index ncols, const std::vector<Triplet<V>> &triplets) {
    return build_csr<V>(nrows, ncols, std::span<const Triplet<V>>(triplets));
}

/// Transpose; block values are adjointed.
template <typename V>
CsrMatrix<V> transpose(const CsrMatrix<V> &A) {
    const Index n = A.rows(), m = A.cols();
    std::vector<Index> ptr(m + 1, 0);
    for (Index c : A.col()) ++ptr[c + 1];
    std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());

    std::vector<Index> col(A.nnz());
    std::vector<V> val(A.nnz());
    std::vector<Index> pos(ptr.begin(), ptr.end() - 1);
    for (Index i = 0; i < n; ++i)
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
            Index k = pos[A.col()[j]]++;
            col[k] = i;
            val[k] = math::adjoint(A.val()[j]);
        }
    return CsrMatrix<V>(m, n, std::move(ptr), std::move(col), std::move(val));
}

/// Sparse matrix-matrix product. Structurally produced zeros are kept.
template <typename V>
CsrMatrix<V> product(const CsrMatrix<V> &A, const CsrMatrix<V> &B) {
    if (A.cols() != B.rows()) fail(ErrorKind::DimensionMismatch, "product: inner dimensions differ");
    const Index n = A.rows(), m = B.cols();
    constexpr Index unset = ~Index(0);

    std::vector<Index> marker(m, unset);
    std::vector<Index> ptr(n + 1, 0), col;
    std::vector<V> val;
    std::vector<Index> row_cols;

    for (Index i = 0; i < n; ++i) {
        row_cols.clear();
        const Index row_start = col.size();
        for (Index ja = A.row_begin(i); ja < A.row_end(i); ++ja) {
            const Index k = A.col()[ja];
            const V &a = A.val()[ja];
            for (Index jb = B.row_begin(k); jb < B.row_end(k); ++jb) {
                const Index c = B.col()[jb];
                if (marker[c] == unset || marker[c] < row_start) {
                    marker[c] = col.size();
                    col.push_back(c);
                    val.push_back(a * B.val()[jb]);
                } else {
                    val[marker[c]] += a * B.val()[jb];
                }
            }
        }
        // Sort the new row by column.
        const Index len = col.size() - row_start;
        if (len > 1) {
            std::vector<Index> perm(len);
            std::iota(perm.begin(), perm.end(), Index(0));
            std::sort(perm.begin(), perm.end(),
                      [&](Index a, Index b) { return col[row_start + a] < col[row_start + b]; });
            std::vector<Index> c2(len);
            std::vector<V> v2(len);
            for (Index k = 0; k < len; ++k) {
                c2[k] = col[row_start + perm[k]];
                v2[k] = val[row_start + perm[k]];
            }
            std::copy(c2.begin(), c2.end(), col.begin() + static_cast<std::ptrdiff_t>(row_start));
            std::copy(v2.begin(), v2.end(), val.begin() + static_cast<std::ptrdiff_t>(row_start));
        }
        ptr[i + 1] = col.size();
    }
    return CsrMatrix<V>(n, m, std::move(ptr), std::move(col), std::move(val));
}

/// Main (block-)diagonal, optionally inverted per value.
template <typename V>
std::vector<V> diagonal(const CsrMatrix<V> &A, bool invert = false) {
    if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "diagonal: matrix is not square");
    std::vector<V> d(A.rows(), math::zero<V>());
    for (Index i = 0; i < A.rows(); ++i) {
        bool found = false;
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j)
            if (A.col()[j] == i) {
                d[i] = A.val()[j];
                found = true;
                break;
            }
        if (invert) {
            if (!found || math::norm(d[i]) == 0)
                fail(ErrorKind::ZeroDiagonal, "zero diagonal in row " + std::to_string(i));
            d[i] = math::inverse(d[i]);
        }
    }
    return d;
}

/// Groups b x b tiles of a scalar matrix into block values. Absent scalars
/// inside a stored tile become explicit zeros.
template <int N, typename T>
CsrMatrix<Block<T, N>> to_block(const CsrMatrix<T> &A) {
    static_assert(std::is_floating_point_v<T>);
    if (A.rows() % N != 0 || A.cols() % N != 0)
        fail(ErrorKind::NotDivisible, "matrix dimensions are not divisible by the block size");
    const Index nb = A.rows() / N, mb = A.cols() / N;
    constexpr Index unset = ~Index(0);

    std::vector<Index> marker(mb, unset);
    std::vector<Index> ptr(nb + 1, 0), col;
    std::vector<Block<T, N>> val;
    for (Index ib = 0; ib < nb; ++ib) {
        const Index row_start = col.size();
        for (int r = 0; r < N; ++r) {
            const Index i = ib * N + r;
            for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
                const Index c = A.col()[j], cb = c / N;
                if (marker[cb] == unset || marker[cb] < row_start) {
                    marker[cb] = col.size();
                    col.push_back(cb);
                    val.push_back(Block<T, N>::zero());
                }
                val[marker[cb]](r, static_cast<int>(c % N)) += A.val()[j];
            }
        }
        const Index len = col.size() - row_start;
        std::vector<Index> perm(len);
        std::iota(perm.begin(), perm.end(), Index(0));
        std::sort(perm.begin(), perm.end(), [&](Index a, Index b) { return col[row_start + a] < col[row_start + b]; });
        std::vector<Index> c2(len);
        std::vector<Block<T, N>> v2(len);
        for (Index k = 0; k < len; ++k) {
            c2[k] = col[row_start + perm[k]];
            v2[k] = val[row_start + perm[k]];
        }
        std::copy(c2.begin(), c2.end(), col.begin() + static_cast<std::ptrdiff_t>(row_start));
        std::copy(v2.begin(), v2.end(), val.begin() + static_cast<std::ptrdiff_t>(row_start));
        ptr[ib + 1] = col.size();
    }
    return CsrMatrix<Block<T, N>>(nb, mb, std::move(ptr), std::move(col), std::move(val));
}

/// Expands block values into scalar entries (every tile entry is stored).
template <typename T, int N>
CsrMatrix<T> to_scalar(const CsrMatrix<Block<T, N>> &A) {
    const Index n = A.rows() * N, m = A.cols() * N;
    std::vector<Index> ptr(n + 1, 0), col;
    std::vector<T> val;
    col.reserve(A.nnz() * N * N);
    val.reserve(A.nnz() * N * N);
    for (Index ib = 0; ib < A.rows(); ++ib)
        for (int r = 0; r < N; ++r) {
            for (Index j = A.row_begin(ib); j < A.row_end(ib); ++j)
                for (int c = 0; c < N; ++c) {
                    col.push_back(A.col()[j] * N + static_cast<Index>(c));
                    val.push_back(A.val()[j](r, c));
                }
            ptr[ib * N + static_cast<Index>(r) + 1] = col.size();
        }
    return CsrMatrix<T>(n, m, std::move(ptr), std::move(col), std::move(val));
}

template <typename T, typename V>
std::vector<math::rebind<V, T>> convert_values(const std::vector<V> &v) {
    std::vector<math::rebind<V, T>> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = math::convert<T>(v[i]);
    return out;
}

/// Converts stored values to another precision; structure is copied as is.
template <typename T, typename V>
CsrMatrix<math::rebind<V, T>> convert_precision(const CsrMatrix<V> &A) {
    return CsrMatrix<math::rebind<V, T>>(A.rows(), A.cols(), A.ptr(), A.col(), convert_values<T>(A.val()));
}

/// Restricts A to the rows and columns selected by the masks, reindexed in
/// ascending original order.
template <typename V>
CsrMatrix<V> submatrix(const CsrMatrix<V> &A, const std::vector<bool> &rows, const std::vector<bool> &cols) {
    if (rows.size() != A.rows() || cols.size() != A.cols())
        fail(ErrorKind::DimensionMismatch, "submatrix: mask length mismatch");
    constexpr Index unset = ~Index(0);
    std::vector<Index> cmap(A.cols(), unset);
    Index m = 0;
    for (Index j = 0; j < A.cols(); ++j)
        if (cols[j]) cmap[j] = m++;
    Index n = static_cast<Index>(std::count(rows.begin(), rows.end(), true));
    if (n == 0 || m == 0) fail(ErrorKind::EmptySelection, "submatrix: empty row or column selection");

    std::vector<Index> ptr(1, 0), col;
    std::vector<V> val;
    ptr.reserve(n + 1);
    for (Index i = 0; i < A.rows(); ++i) {
        if (!rows[i]) continue;
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
            const Index c = cmap[A.col()[j]];
            if (c == unset) continue;
            col.push_back(c);
            val.push_back(A.val()[j]);
        }
        ptr.push_back(col.size());
    }
    return CsrMatrix<V>(n, m, std::move(ptr), std::move(col), std::move(val));
}

template <typename V>
MatrixBytes memory_bytes(const CsrMatrix<V> &A) {
    return A.bytes();
}

/// Views a scalar vector as block vector (copying, with optional precision change).
template <typename R, typename T>
std::vector<R> gather_values(std::span<const T> x) {
    constexpr int N = math::block_size<R>;
    using S = math::scalar_of<R>;
    std::vector<R> out(x.size() / N);
    if constexpr (N == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = math::convert<S>(x[i]);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i)
            for (int k = 0; k < N; ++k) out[i](k) = math::convert<S>(x[i * N + k]);
    }
    return out;
}

template <typename R, typename T>
void scatter_values(const std::vector<R> &x, std::span<T> out) {
    constexpr int N = math::block_size<R>;
    if constexpr (N == 1) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<T>(x[i]);
    } else {
        for (std::size_t i = 0; i < x.size(); ++i)
            for (int k = 0; k < N; ++k) out[i * N + k] = static_cast<T>(x[i](k));
    }
}

} // namespace saddle
