#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "saddle/error.hpp"
#include "saddle/sparse.hpp"
#include "saddle/values.hpp"

namespace saddle {

/// Dense LU factorization with partial pivoting. Used as the coarsest-level
/// solver of the multigrid hierarchy; block systems are factored in their
/// scalar expansion.
template <typename T>
class DenseLU {
  public:
    DenseLU() = default;

    /// Factors the scalar expansion of A.
    template <typename V>
    explicit DenseLU(const CsrMatrix<V> &A) {
        constexpr int B = math::block_size<V>;
        if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "DenseLU: matrix is not square");
        n_ = static_cast<std::size_t>(A.rows()) * B;
        lu_.assign(n_ * n_, T(0));
        for (Index i = 0; i < A.rows(); ++i)
            for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
                const auto &v = A.val()[j];
                const std::size_t r0 = static_cast<std::size_t>(i) * B, c0 = static_cast<std::size_t>(A.col()[j]) * B;
                if constexpr (B == 1) lu_[r0 * n_ + c0] = static_cast<T>(v);
                else
                    for (int r = 0; r < B; ++r)
                        for (int c = 0; c < B; ++c) lu_[(r0 + r) * n_ + c0 + c] = static_cast<T>(v(r, c));
            }
        factorize();
    }

    /// Stores the factors of another instance in precision T.
    template <typename U>
    explicit DenseLU(const DenseLU<U> &other) : n_(other.size()), perm_(other.pivots()) {
        lu_.resize(other.factors().size());
        for (std::size_t i = 0; i < lu_.size(); ++i) lu_[i] = math::convert<T>(other.factors()[i]);
    }

    std::size_t size() const { return n_; }
    const std::vector<T> &factors() const { return lu_; }
    const std::vector<Index> &pivots() const { return perm_; }

    /// Solves in place; x holds the right-hand side on entry.
    void solve(std::vector<T> &x) const {
        std::vector<T> y(n_);
        for (std::size_t i = 0; i < n_; ++i) y[i] = x[perm_[i]];
        for (std::size_t i = 0; i < n_; ++i) {
            T s = y[i];
            const T *row = &lu_[i * n_];
            for (std::size_t j = 0; j < i; ++j) s -= row[j] * y[j];
            y[i] = s;
        }
        for (std::size_t i = n_; i-- > 0;) {
            T s = y[i];
            const T *row = &lu_[i * n_];
            for (std::size_t j = i + 1; j < n_; ++j) s -= row[j] * y[j];
            y[i] = s / row[i];
        }
        x.swap(y);
    }

    /// Solves A x = f for (block) vectors.
    template <typename R>
    void solve(const std::vector<R> &f, std::vector<R> &x) const {
        std::vector<T> buf(n_);
        scatter_values(f, std::span<T>(buf));
        solve(buf);
        x = gather_values<R>(std::span<const T>(buf));
    }

    Footprint footprint() const { return {perm_.size() * sizeof(Index), lu_.size() * sizeof(T)}; }

  private:
    void factorize() {
        perm_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;
        T scale = 0;
        for (T v : lu_) scale = std::max(scale, std::abs(v));
        const T tiny = T(1e-14) * scale;

        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t p = k;
            for (std::size_t i = k + 1; i < n_; ++i)
                if (std::abs(lu_[i * n_ + k]) > std::abs(lu_[p * n_ + k])) p = i;
            if (!(std::abs(lu_[p * n_ + k]) > tiny))
                fail(ErrorKind::SetupFailure, "dense LU: singular matrix at column " + std::to_string(k));
            if (p != k) {
                for (std::size_t j = 0; j < n_; ++j) std::swap(lu_[k * n_ + j], lu_[p * n_ + j]);
                std::swap(perm_[k], perm_[p]);
            }
            const T piv = lu_[k * n_ + k];
            const T *rowk = &lu_[k * n_];
            for (std::size_t i = k + 1; i < n_; ++i) {
                T *rowi = &lu_[i * n_];
                const T l = rowi[k] / piv;
                rowi[k] = l;
                if (l == T(0)) continue;
                for (std::size_t j = k + 1; j < n_; ++j) rowi[j] -= l * rowk[j];
            }
        }
    }

    std::size_t n_ = 0;
    std::vector<T> lu_;
    std::vector<Index> perm_;
};

} // namespace saddle
