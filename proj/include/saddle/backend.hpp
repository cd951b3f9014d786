#pragma once

// Backend primitives the iterative solvers are written against.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "saddle/error.hpp"
#include "saddle/sparse.hpp"
#include "saddle/values.hpp"

namespace saddle::backend {

namespace detail {
inline void check(bool cond, const char *what) {
    if (!cond) fail(ErrorKind::DimensionMismatch, what);
}
} // namespace detail

/// y = alpha * A * x + beta * y. With beta == 0 the previous contents of y
/// are ignored.
template <typename V, typename R = math::rhs_of<V>>
void spmv(math::scalar_of<V> alpha, const CsrMatrix<V> &A, const std::vector<R> &x, math::scalar_of<V> beta,
          std::vector<R> &y) {
    detail::check(x.size() == A.cols() && y.size() == A.rows(), "spmv: dimension mismatch");
    const auto n = static_cast<std::int64_t>(A.rows());
    const auto &ptr = A.ptr();
    const auto &col = A.col();
    const auto &val = A.val();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        R s = math::zero<R>();
        for (Index j = ptr[i], e = ptr[i + 1]; j < e; ++j) s += val[j] * x[col[j]];
        if (beta == 0) y[i] = alpha * s;
        else y[i] = alpha * s + beta * y[i];
    }
}

/// r = f - A * x
template <typename V, typename R = math::rhs_of<V>>
void residual(const std::vector<R> &f, const CsrMatrix<V> &A, const std::vector<R> &x, std::vector<R> &r) {
    detail::check(f.size() == A.rows() && x.size() == A.cols() && r.size() == A.rows(),
                  "residual: dimension mismatch");
    const auto n = static_cast<std::int64_t>(A.rows());
    const auto &ptr = A.ptr();
    const auto &col = A.col();
    const auto &val = A.val();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        R s = f[i];
        for (Index j = ptr[i], e = ptr[i + 1]; j < e; ++j) s -= val[j] * x[col[j]];
        r[i] = s;
    }
}

template <typename R>
std::vector<R> residual(const std::vector<R> &f, const auto &A, const std::vector<R> &x) {
    std::vector<R> r(f.size());
    residual(f, A, x, r);
    return r;
}

/// Sum over all scalar components of x_i * y_i, accumulated in double.
template <typename R>
math::scalar_of<R> inner_product(const std::vector<R> &x, const std::vector<R> &y) {
    detail::check(x.size() == y.size(), "inner_product: length mismatch");
    const auto n = static_cast<std::int64_t>(x.size());
    double s = 0;
#pragma omp parallel for schedule(static) reduction(+ : s)
    for (std::int64_t i = 0; i < n; ++i) s += static_cast<double>(math::inner_product(x[i], y[i]));
    return static_cast<math::scalar_of<R>>(s);
}

template <typename R>
math::scalar_of<R> norm2(const std::vector<R> &x) {
    return std::sqrt(inner_product(x, x));
}

/// y = a * x + b * y. With b == 0 the previous contents of y are ignored.
template <typename R, typename S = math::scalar_of<R>>
void axpby(S a, const std::vector<R> &x, S b, std::vector<R> &y) {
    detail::check(x.size() == y.size(), "axpby: length mismatch");
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        if (b == 0) y[i] = a * x[i];
        else y[i] = a * x[i] + b * y[i];
    }
}

/// z = a * x + b * y + c * z
template <typename R, typename S = math::scalar_of<R>>
void axpbypcz(S a, const std::vector<R> &x, S b, const std::vector<R> &y, S c, std::vector<R> &z) {
    detail::check(x.size() == y.size() && y.size() == z.size(), "axpbypcz: length mismatch");
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        if (c == 0) z[i] = a * x[i] + b * y[i];
        else z[i] = a * x[i] + b * y[i] + c * z[i];
    }
}

/// z = a * D * x + b * z with D a vector of (block) diagonal values.
template <typename V, typename R, typename S = math::scalar_of<R>>
void vmul(S a, const std::vector<V> &D, const std::vector<R> &x, S b, std::vector<R> &z) {
    detail::check(D.size() == x.size() && x.size() == z.size(), "vmul: length mismatch");
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        if (b == 0) z[i] = a * (D[i] * x[i]);
        else z[i] = a * (D[i] * x[i]) + b * z[i];
    }
}

template <typename R>
void clear(std::vector<R> &x) {
    for (auto &v : x) v = math::zero<R>();
}

} // namespace saddle::backend
