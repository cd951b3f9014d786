#pragma once

// Value types the containers and solvers are generic over: builtin float and
// double scalars, and small statically sized matrices of either precision.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <utility>

#include "saddle/error.hpp"

namespace saddle {

/// Dense N x M matrix stored inline, row-major.
template <typename T, int N, int M>
struct StaticMatrix {
    static_assert(std::is_floating_point_v<T>);
    static_assert(N >= 1 && N <= 4 && M >= 1 && M <= 4, "block sizes are limited to 1..4");

    using value_type = T;
    static constexpr int rows = N;
    static constexpr int cols = M;

    std::array<T, N * M> buf{};

    constexpr T &operator()(int i, int j) { return buf[i * M + j]; }
    constexpr const T &operator()(int i, int j) const { return buf[i * M + j]; }

    constexpr T &operator()(int i) requires(M == 1) { return buf[i]; }
    constexpr const T &operator()(int i) const requires(M == 1) { return buf[i]; }

    constexpr T &operator[](int i) { return buf[i]; }
    constexpr const T &operator[](int i) const { return buf[i]; }

    static constexpr StaticMatrix zero() { return StaticMatrix{}; }

    static constexpr StaticMatrix identity() requires(N == M) {
        StaticMatrix r{};
        for (int i = 0; i < N; ++i) r(i, i) = T(1);
        return r;
    }

    static constexpr StaticMatrix constant(T c) {
        StaticMatrix r;
        r.buf.fill(c);
        return r;
    }

    constexpr StaticMatrix &operator+=(const StaticMatrix &y) {
        for (int i = 0; i < N * M; ++i) buf[i] += y.buf[i];
        return *this;
    }

    constexpr StaticMatrix &operator-=(const StaticMatrix &y) {
        for (int i = 0; i < N * M; ++i) buf[i] -= y.buf[i];
        return *this;
    }

    constexpr StaticMatrix &operator*=(T c) {
        for (auto &v : buf) v *= c;
        return *this;
    }

    friend constexpr StaticMatrix operator+(StaticMatrix x, const StaticMatrix &y) { return x += y; }
    friend constexpr StaticMatrix operator-(StaticMatrix x, const StaticMatrix &y) { return x -= y; }
    friend constexpr StaticMatrix operator*(StaticMatrix x, T c) { return x *= c; }
    friend constexpr StaticMatrix operator*(T c, StaticMatrix x) { return x *= c; }

    friend constexpr StaticMatrix operator-(StaticMatrix x) {
        for (auto &v : x.buf) v = -v;
        return x;
    }

    friend constexpr bool operator==(const StaticMatrix &, const StaticMatrix &) = default;
};

template <typename T, int N, int K, int M>
constexpr StaticMatrix<T, N, M> operator*(const StaticMatrix<T, N, K> &x, const StaticMatrix<T, K, M> &y) {
    StaticMatrix<T, N, M> z{};
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < K; ++k) {
            T xik = x(i, k);
            for (int j = 0; j < M; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

template <typename T, int N>
using Block = StaticMatrix<T, N, N>;

template <typename T, int N>
using BlockVector = StaticMatrix<T, N, 1>;

namespace math {

template <typename V>
struct value_traits;

template <std::floating_point T>
struct value_traits<T> {
    using scalar_type = T;
    using rhs_type = T;
    static constexpr int block_size = 1;
    template <typename U> using rebind = U;
};

template <typename T, int N, int M>
struct value_traits<StaticMatrix<T, N, M>> {
    using scalar_type = T;
    using rhs_type = StaticMatrix<T, N, 1>;
    static constexpr int block_size = N;
    template <typename U> using rebind = StaticMatrix<U, N, M>;
};

template <typename V> using scalar_of = typename value_traits<V>::scalar_type;
template <typename V> using rhs_of = typename value_traits<V>::rhs_type;
template <typename V, typename U> using rebind = typename value_traits<V>::template rebind<U>;
template <typename V> inline constexpr int block_size = value_traits<V>::block_size;

template <typename V>
concept Value = requires { typename value_traits<V>::scalar_type; };

template <typename V> constexpr V zero() {
    if constexpr (std::is_floating_point_v<V>) return V(0);
    else return V::zero();
}

template <typename V> constexpr V identity() {
    if constexpr (std::is_floating_point_v<V>) return V(1);
    else return V::identity();
}

/// Frobenius norm for blocks, absolute value for scalars.
template <std::floating_point T> inline T norm(T x) { return std::abs(x); }

template <typename T, int N, int M>
inline T norm(const StaticMatrix<T, N, M> &x) {
    T s = 0;
    for (T v : x.buf) s += v * v;
    return std::sqrt(s);
}

template <std::floating_point T> constexpr T adjoint(T x) { return x; }

template <typename T, int N, int M>
constexpr StaticMatrix<T, M, N> adjoint(const StaticMatrix<T, N, M> &x) {
    StaticMatrix<T, M, N> y{};
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) y(j, i) = x(i, j);
    return y;
}

/// Sum of componentwise products.
template <std::floating_point T> constexpr T inner_product(T x, T y) { return x * y; }

template <typename T, int N, int M>
constexpr T inner_product(const StaticMatrix<T, N, M> &x, const StaticMatrix<T, N, M> &y) {
    T s = 0;
    for (int i = 0; i < N * M; ++i) s += x.buf[i] * y.buf[i];
    return s;
}

template <std::floating_point T> inline bool is_finite(T x) { return std::isfinite(x); }

template <typename T, int N, int M>
inline bool is_finite(const StaticMatrix<T, N, M> &x) {
    for (T v : x.buf)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Inverse via dense LU with partial pivoting. Throws SingularBlock when a
/// pivot falls below 1e-14 times the Frobenius norm of the input.
template <std::floating_point T>
inline T inverse(T x) {
    if (x == T(0) || !std::isfinite(x)) fail(ErrorKind::SingularBlock, "zero scalar pivot");
    return T(1) / x;
}

template <typename T, int N>
StaticMatrix<T, N, N> inverse(const StaticMatrix<T, N, N> &x) {
    const T tiny = T(1e-14) * norm(x);
    StaticMatrix<T, N, N> lu = x;
    std::array<int, N> perm;
    for (int i = 0; i < N; ++i) perm[i] = i;

    for (int k = 0; k < N; ++k) {
        int p = k;
        for (int i = k + 1; i < N; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (!(std::abs(lu(p, k)) > tiny)) fail(ErrorKind::SingularBlock, "block pivot below threshold");
        if (p != k) {
            for (int j = 0; j < N; ++j) std::swap(lu(k, j), lu(p, j));
            std::swap(perm[k], perm[p]);
        }
        for (int i = k + 1; i < N; ++i) {
            lu(i, k) /= lu(k, k);
            for (int j = k + 1; j < N; ++j) lu(i, j) -= lu(i, k) * lu(k, j);
        }
    }

    // Solve LU * inv(:, c) = P * e_c column by column.
    StaticMatrix<T, N, N> out{};
    for (int c = 0; c < N; ++c) {
        std::array<T, N> y{};
        for (int i = 0; i < N; ++i) {
            T s = (perm[i] == c) ? T(1) : T(0);
            for (int j = 0; j < i; ++j) s -= lu(i, j) * y[j];
            y[i] = s;
        }
        for (int i = N - 1; i >= 0; --i) {
            T s = y[i];
            for (int j = i + 1; j < N; ++j) s -= lu(i, j) * out(j, c);
            out(i, c) = s / lu(i, i);
        }
    }
    return out;
}

/// Converts a value to another scalar precision. Narrowing throws Overflow
/// when a finite entry exceeds the target range; widening is exact.
template <std::floating_point To, std::floating_point From>
inline To convert(From x) {
    if constexpr (sizeof(To) < sizeof(From)) {
        if (std::isfinite(x) && std::abs(x) > From(std::numeric_limits<To>::max()))
            fail(ErrorKind::Overflow, "value exceeds target precision range");
    }
    return static_cast<To>(x);
}

template <std::floating_point To, typename From, int N, int M>
inline StaticMatrix<To, N, M> convert(const StaticMatrix<From, N, M> &x) {
    StaticMatrix<To, N, M> y;
    for (int i = 0; i < N * M; ++i) y.buf[i] = convert<To>(x.buf[i]);
    return y;
}

} // namespace math
} // namespace saddle
