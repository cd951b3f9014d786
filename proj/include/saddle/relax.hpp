#pragma once

// Single-level preconditioners. Each one can be applied standalone
// (x = M * rhs) or used as a multigrid smoother (x += M * (rhs - A * x)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "saddle/backend.hpp"
#include "saddle/error.hpp"
#include "saddle/sparse.hpp"
#include "saddle/values.hpp"

namespace saddle::relax {

/// Incomplete LU factors: unit lower L (diagonal implied), strictly upper U
/// and the inverted (block) pivots.
template <typename V>
struct IluFactors {
    CsrMatrix<V> L;
    CsrMatrix<V> U;
    std::vector<V> Dinv;

    IluFactors() = default;
    IluFactors(CsrMatrix<V> l, CsrMatrix<V> u, std::vector<V> d) : L(std::move(l)), U(std::move(u)), Dinv(std::move(d)) {}

    template <typename W>
    explicit IluFactors(const IluFactors<W> &o)
        : L(convert_precision<math::scalar_of<V>>(o.L)), U(convert_precision<math::scalar_of<V>>(o.U)),
          Dinv(convert_values<math::scalar_of<V>>(o.Dinv)) {}

    /// In-place z = U^{-1} L^{-1} z.
    template <typename R>
    void solve(std::vector<R> &z) const {
        const Index n = Dinv.size();
        if (z.size() != n) fail(ErrorKind::DimensionMismatch, "ilu apply: length mismatch");
        const auto &lp = L.ptr(), &lc = L.col();
        const auto &lv = L.val();
        for (Index i = 0; i < n; ++i) {
            R s = z[i];
            for (Index j = lp[i]; j < lp[i + 1]; ++j) s -= lv[j] * z[lc[j]];
            z[i] = s;
        }
        const auto &up = U.ptr(), &uc = U.col();
        const auto &uv = U.val();
        for (Index i = n; i-- > 0;) {
            R s = z[i];
            for (Index j = up[i]; j < up[i + 1]; ++j) s -= uv[j] * z[uc[j]];
            z[i] = Dinv[i] * s;
        }
    }

    Footprint footprint() const {
        return L.bytes().footprint() + U.bytes().footprint() + vector_footprint(Dinv);
    }
};

struct IlukParams {
    int k = 1;
};

struct IlutParams {
    double tau = 1e-2;
    int p = 2;
};

struct Spai0Params {};

struct JacobiParams {
    double omega = 0.72;
};

namespace detail {

/// Sparse accumulator for one row of an incomplete factorization.
template <typename V>
struct RowWork {
    static constexpr Index unset = ~Index(0);

    std::vector<Index> pos; // column -> slot in cols/vals, or unset
    std::vector<Index> cols;
    std::vector<V> vals;
    std::vector<int> levels;

    explicit RowWork(Index n) : pos(n, unset) {}

    bool has(Index c) const { return pos[c] != unset; }

    void add(Index c, const V &v, int lev) {
        pos[c] = cols.size();
        cols.push_back(c);
        vals.push_back(v);
        levels.push_back(lev);
    }

    void reset() {
        for (Index c : cols) pos[c] = unset;
        cols.clear();
        vals.clear();
        levels.clear();
    }
};

template <typename V>
V invert_pivot(const V &d, Index row) {
    try {
        if (math::norm(d) == 0) throw Error(ErrorKind::SingularBlock, "zero pivot");
        return math::inverse(d);
    } catch (const Error &) {
        fail(ErrorKind::ZeroPivot, "zero pivot in row " + std::to_string(row));
    }
}

} // namespace detail

/// ILU(k): level-of-fill incomplete factorization.
template <typename V>
class Iluk {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;

    using params = IlukParams;

    explicit Iluk(const CsrMatrix<V> &A, const params &prm = params{}) : prm_(prm) { setup(A); }

    template <typename W>
    explicit Iluk(const Iluk<W> &o) : prm_(o.parameters()), f_(o.factors()) {}

    const params &parameters() const { return prm_; }
    const IluFactors<V> &factors() const { return f_; }

    void apply(const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const {
        x = rhs;
        f_.solve(x);
    }

    void apply_pre(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                   std::vector<rhs_type> &tmp) const {
        backend::residual(rhs, A, x, tmp);
        f_.solve(tmp);
        backend::axpby(math::scalar_of<V>(1), tmp, math::scalar_of<V>(1), x);
    }

    void apply_post(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                    std::vector<rhs_type> &tmp) const {
        apply_pre(A, rhs, x, tmp);
    }

    Footprint footprint() const { return f_.footprint(); }

  private:
    void setup(const CsrMatrix<V> &A) {
        if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "iluk: matrix is not square");
        if (prm_.k < 0) fail(ErrorKind::InvalidArgument, "iluk: fill level must be non-negative");
        const Index n = A.rows();

        std::vector<Index> lptr(n + 1, 0), lcol, uptr(n + 1, 0), ucol;
        std::vector<V> lval, uval, dinv(n);
        std::vector<int> ulev;

        detail::RowWork<V> w(n);
        std::priority_queue<Index, std::vector<Index>, std::greater<>> lower;

        for (Index i = 0; i < n; ++i) {
            for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
                const Index c = A.col()[j];
                w.add(c, A.val()[j], 0);
                if (c < i) lower.push(c);
            }

            while (!lower.empty()) {
                const Index k = lower.top();
                lower.pop();
                const Index sk = w.pos[k];
                const V lik = w.vals[sk] * dinv[k];
                w.vals[sk] = lik;
                const int lev_ik = w.levels[sk];
                for (Index j = uptr[k]; j < uptr[k + 1]; ++j) {
                    const Index c = ucol[j];
                    const int lev = lev_ik + ulev[j] + 1;
                    if (w.has(c)) {
                        const Index s = w.pos[c];
                        w.vals[s] -= lik * uval[j];
                        w.levels[s] = std::min(w.levels[s], lev);
                    } else if (lev <= prm_.k) {
                        w.add(c, -(lik * uval[j]), lev);
                        if (c < i) lower.push(c);
                    }
                }
            }

            std::vector<Index> order(w.cols.size());
            for (Index s = 0; s < order.size(); ++s) order[s] = s;
            std::sort(order.begin(), order.end(), [&](Index a, Index b) { return w.cols[a] < w.cols[b]; });

            bool has_diag = false;
            for (Index s : order) {
                const Index c = w.cols[s];
                if (c < i) {
                    lcol.push_back(c);
                    lval.push_back(w.vals[s]);
                } else if (c == i) {
                    dinv[i] = detail::invert_pivot(w.vals[s], i);
                    has_diag = true;
                } else {
                    ucol.push_back(c);
                    uval.push_back(w.vals[s]);
                    ulev.push_back(w.levels[s]);
                }
            }
            if (!has_diag) fail(ErrorKind::ZeroPivot, "missing diagonal in row " + std::to_string(i));
            lptr[i + 1] = lcol.size();
            uptr[i + 1] = ucol.size();
            w.reset();
        }

        f_ = IluFactors<V>(CsrMatrix<V>(n, n, std::move(lptr), std::move(lcol), std::move(lval)),
                           CsrMatrix<V>(n, n, std::move(uptr), std::move(ucol), std::move(uval)), std::move(dinv));
    }

    params prm_;
    IluFactors<V> f_;
};

/// ILUT(tau, p): threshold incomplete factorization. Entries below
/// tau * ||row||_2 are dropped; each of the L and U parts of a row keeps at
/// most (its count in A) + p of the largest remaining entries.
template <typename V>
class Ilut {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;

    using params = IlutParams;

    explicit Ilut(const CsrMatrix<V> &A, const params &prm = params{}) : prm_(prm) { setup(A); }

    template <typename W>
    explicit Ilut(const Ilut<W> &o) : prm_(o.parameters()), f_(o.factors()) {}

    const params &parameters() const { return prm_; }
    const IluFactors<V> &factors() const { return f_; }

    void apply(const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const {
        x = rhs;
        f_.solve(x);
    }

    void apply_pre(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                   std::vector<rhs_type> &tmp) const {
        backend::residual(rhs, A, x, tmp);
        f_.solve(tmp);
        backend::axpby(math::scalar_of<V>(1), tmp, math::scalar_of<V>(1), x);
    }

    void apply_post(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                    std::vector<rhs_type> &tmp) const {
        apply_pre(A, rhs, x, tmp);
    }

    Footprint footprint() const { return f_.footprint(); }

  private:
    using S = math::scalar_of<V>;

    void setup(const CsrMatrix<V> &A) {
        if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "ilut: matrix is not square");
        if (!(prm_.tau >= 0) || prm_.p < 1) fail(ErrorKind::InvalidArgument, "ilut: need tau >= 0 and p >= 1");
        const Index n = A.rows();

        std::vector<Index> lptr(n + 1, 0), lcol, uptr(n + 1, 0), ucol;
        std::vector<V> lval, uval, dinv(n);

        detail::RowWork<V> w(n);
        std::vector<bool> dropped;
        std::priority_queue<Index, std::vector<Index>, std::greater<>> lower;

        for (Index i = 0; i < n; ++i) {
            double rownorm = 0;
            Index nl = 0, nu = 0;
            for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
                const Index c = A.col()[j];
                const double a = math::norm(A.val()[j]);
                rownorm += a * a;
                w.add(c, A.val()[j], 0);
                if (c < i) {
                    lower.push(c);
                    ++nl;
                } else if (c > i) {
                    ++nu;
                }
            }
            const double drop = prm_.tau * std::sqrt(rownorm);
            dropped.assign(w.cols.size(), false);

            while (!lower.empty()) {
                const Index k = lower.top();
                lower.pop();
                const Index sk = w.pos[k];
                const V lik = w.vals[sk] * dinv[k];
                w.vals[sk] = lik;
                if (static_cast<double>(math::norm(lik)) < drop) {
                    dropped[sk] = true;
                    continue;
                }
                for (Index j = uptr[k]; j < uptr[k + 1]; ++j) {
                    const Index c = ucol[j];
                    if (w.has(c)) {
                        w.vals[w.pos[c]] -= lik * uval[j];
                    } else {
                        w.add(c, -(lik * uval[j]), 1);
                        dropped.push_back(false);
                        if (c < i) lower.push(c);
                    }
                }
            }

            std::vector<Index> lsel, usel;
            bool has_diag = false;
            for (Index s = 0; s < w.cols.size(); ++s) {
                const Index c = w.cols[s];
                if (c == i) {
                    dinv[i] = detail::invert_pivot(w.vals[s], i);
                    has_diag = true;
                    continue;
                }
                if (dropped[s] || static_cast<double>(math::norm(w.vals[s])) < drop) continue;
                (c < i ? lsel : usel).push_back(s);
            }
            if (!has_diag) fail(ErrorKind::ZeroPivot, "missing diagonal in row " + std::to_string(i));

            keep_largest(w, lsel, nl + static_cast<Index>(prm_.p), lcol, lval);
            keep_largest(w, usel, nu + static_cast<Index>(prm_.p), ucol, uval);
            lptr[i + 1] = lcol.size();
            uptr[i + 1] = ucol.size();
            w.reset();
        }

        f_ = IluFactors<V>(CsrMatrix<V>(n, n, std::move(lptr), std::move(lcol), std::move(lval)),
                           CsrMatrix<V>(n, n, std::move(uptr), std::move(ucol), std::move(uval)), std::move(dinv));
    }

    static void keep_largest(const detail::RowWork<V> &w, std::vector<Index> &sel, Index count,
                             std::vector<Index> &col, std::vector<V> &val) {
        if (sel.size() > count) {
            std::nth_element(sel.begin(), sel.begin() + static_cast<std::ptrdiff_t>(count), sel.end(),
                             [&](Index a, Index b) {
                                 const auto na = math::norm(w.vals[a]), nb = math::norm(w.vals[b]);
                                 return na > nb || (na == nb && w.cols[a] < w.cols[b]);
                             });
            sel.resize(count);
        }
        std::sort(sel.begin(), sel.end(), [&](Index a, Index b) { return w.cols[a] < w.cols[b]; });
        for (Index s : sel) {
            col.push_back(w.cols[s]);
            val.push_back(w.vals[s]);
        }
    }

    params prm_;
    IluFactors<V> f_;
};

/// Diagonal sparse approximate inverse minimizing ||I - M A||_F over
/// (block) diagonal M.
template <typename V>
class Spai0 {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;

    using params = Spai0Params;

    explicit Spai0(const CsrMatrix<V> &A, const params & = params{}) { setup(A); }

    template <typename W>
    explicit Spai0(const Spai0<W> &o) : m_(convert_values<math::scalar_of<V>>(o.scaling())) {}

    const std::vector<V> &scaling() const { return m_; }

    void apply(const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const {
        if (x.size() != rhs.size()) x.resize(rhs.size());
        backend::vmul(math::scalar_of<V>(1), m_, rhs, math::scalar_of<V>(0), x);
    }

    void apply_pre(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                   std::vector<rhs_type> &tmp) const {
        backend::residual(rhs, A, x, tmp);
        backend::vmul(math::scalar_of<V>(1), m_, tmp, math::scalar_of<V>(1), x);
    }

    void apply_post(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                    std::vector<rhs_type> &tmp) const {
        apply_pre(A, rhs, x, tmp);
    }

    Footprint footprint() const { return vector_footprint(m_); }

  private:
    void setup(const CsrMatrix<V> &A) {
        if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "spai0: matrix is not square");
        using S = math::scalar_of<V>;
        m_.resize(A.rows());
        for (Index i = 0; i < A.rows(); ++i) {
            S den = 0;
            V diag = math::zero<V>();
            for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
                const S a = math::norm(A.val()[j]);
                den += a * a;
                if (A.col()[j] == i) diag = A.val()[j];
            }
            if (den == 0) fail(ErrorKind::ZeroRow, "spai0: zero row " + std::to_string(i));
            if constexpr (std::is_floating_point_v<V>) {
                m_[i] = diag / den;
            } else {
                const S d = math::norm(diag);
                if (d == 0) fail(ErrorKind::ZeroDiagonal, "spai0: zero diagonal block in row " + std::to_string(i));
                m_[i] = math::inverse(diag) * (d * d / den);
            }
        }
    }

    std::vector<V> m_;
};

/// Damped Jacobi: z = omega * D^{-1} * r.
template <typename V>
class DampedJacobi {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;

    using params = JacobiParams;

    explicit DampedJacobi(const CsrMatrix<V> &A, const params &prm = params{})
        : prm_(prm), dinv_(diagonal(A, true)) {}

    template <typename W>
    explicit DampedJacobi(const DampedJacobi<W> &o)
        : prm_(o.parameters()), dinv_(convert_values<math::scalar_of<V>>(o.inverted_diagonal())) {}

    const params &parameters() const { return prm_; }
    const std::vector<V> &inverted_diagonal() const { return dinv_; }

    void apply(const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const {
        if (x.size() != rhs.size()) x.resize(rhs.size());
        backend::vmul(static_cast<math::scalar_of<V>>(prm_.omega), dinv_, rhs, math::scalar_of<V>(0), x);
    }

    void apply_pre(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                   std::vector<rhs_type> &tmp) const {
        backend::residual(rhs, A, x, tmp);
        backend::vmul(static_cast<math::scalar_of<V>>(prm_.omega), dinv_, tmp, math::scalar_of<V>(1), x);
    }

    void apply_post(const CsrMatrix<V> &A, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x,
                    std::vector<rhs_type> &tmp) const {
        apply_pre(A, rhs, x, tmp);
    }

    Footprint footprint() const { return vector_footprint(dinv_); }

  private:
    params prm_;
    std::vector<V> dinv_;
};

/// Wraps a relaxation as a standalone preconditioner: x = M * rhs.
template <typename V, template <typename> class Relax>
class AsPreconditioner {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;
    using params = typename Relax<V>::params;

    explicit AsPreconditioner(CsrMatrix<V> A, const params &prm = params{}) : A_(std::move(A)), relax_(A_, prm) {}

    template <typename W>
    explicit AsPreconditioner(const AsPreconditioner<W, Relax> &o)
        : A_(convert_precision<math::scalar_of<V>>(o.system_matrix())), relax_(o.relaxation()) {}

    void apply(const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const { relax_.apply(rhs, x); }

    const CsrMatrix<V> &system_matrix() const { return A_; }
    const Relax<V> &relaxation() const { return relax_; }

    Footprint footprint() const { return A_.bytes().footprint() + relax_.footprint(); }

  private:
    CsrMatrix<V> A_;
    Relax<V> relax_;
};

} // namespace saddle::relax
