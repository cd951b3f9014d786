#pragma once

// Outer iterative solvers written against the backend primitives, and the
// make_solver composition of a preconditioner with an iterative solver.
// All solvers use right preconditioning, so the monitored residual is the
// residual of the original system.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "saddle/backend.hpp"
#include "saddle/error.hpp"
#include "saddle/sparse.hpp"
#include "saddle/values.hpp"

namespace saddle::krylov {

struct IterParams {
    double tol = 1e-6;
    Index maxiter = 1000;
    int s = 5;              ///< IDR(s) shadow space dimension
    int M = 50;             ///< GMRES restart length
    std::uint64_t seed = 1234;
    double kappa = 0.7;     ///< IDR(s) omega safeguard

    void validate() const {
        if (!(tol > 0)) fail(ErrorKind::InvalidArgument, "tol must be positive");
        if (s < 1) fail(ErrorKind::InvalidArgument, "s must be at least 1");
        if (M < 1) fail(ErrorKind::InvalidArgument, "M must be at least 1");
    }
};

struct SolveReport {
    Index iters = 0;
    double relres = 0;   ///< ||f - A x|| / ||f||, recomputed at exit
    bool converged = false;
    bool breakdown = false;
    bool stagnation = false;
};

namespace detail {

template <typename Matrix, typename R>
double true_relres(const Matrix &A, const std::vector<R> &f, const std::vector<R> &x, double normf) {
    std::vector<R> r(f.size());
    backend::residual(f, A, x, r);
    return static_cast<double>(backend::norm2(r)) / normf;
}

template <typename R>
void fill_random(std::vector<R> &v, std::mt19937_64 &rng) {
    using S = math::scalar_of<R>;
    constexpr int B = math::block_size<R>;
    std::normal_distribution<double> dist;
    for (auto &x : v) {
        if constexpr (B == 1) x = static_cast<S>(dist(rng));
        else
            for (int k = 0; k < B; ++k) x(k) = static_cast<S>(dist(rng));
    }
}

} // namespace detail

/// Right-preconditioned IDR(s) with biorthogonalization.
template <typename R>
class IdrS {
  public:
    using rhs_type = R;
    using scalar_type = math::scalar_of<R>;
    using params = IterParams;

    IdrS(Index n, const params &prm = params{}) : n_(n), prm_(prm) { prm_.validate(); }

    const params &parameters() const { return prm_; }

    /// Solves A x = f using x as the initial guess.
    template <typename Matrix, typename Precond>
    SolveReport operator()(const Matrix &A, const Precond &P, const std::vector<R> &f, std::vector<R> &x) const {
        using S = scalar_type;
        const int s = prm_.s;
        SolveReport rep;
        if (f.size() != n_ || A.rows() != n_ || A.cols() != n_)
            fail(ErrorKind::DimensionMismatch, "idrs: dimension mismatch");
        if (x.size() != n_) x.assign(n_, math::zero<R>());

        const double normf = backend::norm2(f);
        if (normf == 0) {
            backend::clear(x);
            rep.converged = true;
            return rep;
        }
        const double eps = prm_.tol * normf;

        std::vector<R> r(n_), v(n_), t(n_), w(n_);
        std::vector<std::vector<R>> Pv(s, std::vector<R>(n_)), G(s, std::vector<R>(n_)), U(s, std::vector<R>(n_));
        std::vector<S> Mm(s * s), fv(s), c(s);

        backend::residual(f, A, x, r);
        double normr = backend::norm2(r);

        int restarts = 0;
        bool need_init = true;
        S om = 1;

        while (normr > eps && rep.iters < prm_.maxiter) {
            if (need_init) {
                shadow_space(Pv, prm_.seed + static_cast<std::uint64_t>(restarts));
                for (int i = 0; i < s; ++i) {
                    backend::clear(G[i]);
                    backend::clear(U[i]);
                }
                std::fill(Mm.begin(), Mm.end(), S(0));
                for (int i = 0; i < s; ++i) Mm[i * s + i] = 1;
                om = 1;
                need_init = false;
            }
            bool broke = false;

            for (int i = 0; i < s; ++i) fv[i] = backend::inner_product(Pv[i], r);

            for (int k = 0; k < s; ++k) {
                // Solve the lower triangular system M(k:s, k:s) c = f(k:s).
                for (int i = k; i < s; ++i) {
                    S sum = fv[i];
                    for (int j = k; j < i; ++j) sum -= Mm[i * s + j] * c[j];
                    c[i] = sum / Mm[i * s + i];
                }

                v = r;
                for (int i = k; i < s; ++i) backend::axpby(-c[i], G[i], S(1), v);
                P.apply(v, w);

                backend::axpby(om, w, S(0), t);
                for (int i = k; i < s; ++i) backend::axpby(c[i], U[i], S(1), t);
                std::swap(U[k], t);
                backend::spmv(S(1), A, U[k], S(0), G[k]);

                for (int i = 0; i < k; ++i) {
                    const S alpha = backend::inner_product(Pv[i], G[k]) / Mm[i * s + i];
                    backend::axpby(-alpha, G[i], S(1), G[k]);
                    backend::axpby(-alpha, U[i], S(1), U[k]);
                }
                for (int i = k; i < s; ++i) Mm[i * s + k] = backend::inner_product(Pv[i], G[k]);

                if (Mm[k * s + k] == S(0) || !std::isfinite(static_cast<double>(Mm[k * s + k]))) {
                    broke = true;
                    break;
                }

                const S beta = fv[k] / Mm[k * s + k];
                backend::axpby(-beta, G[k], S(1), r);
                backend::axpby(beta, U[k], S(1), x);
                normr = backend::norm2(r);
                ++rep.iters;

                if (normr <= eps || rep.iters >= prm_.maxiter) break;
                for (int i = k + 1; i < s; ++i) fv[i] -= beta * Mm[i * s + k];
            }

            if (!broke && (normr <= eps || rep.iters >= prm_.maxiter)) break;

            if (!broke) {
                // Dimension reduction step.
                P.apply(r, v);
                backend::spmv(S(1), A, v, S(0), t);
                const double nt = backend::norm2(t);
                const double ts = backend::inner_product(t, r);
                if (nt == 0 || ts == 0) {
                    broke = true;
                } else {
                    const double rho = std::abs(ts / (nt * normr));
                    double omd = ts / (nt * nt);
                    if (rho < prm_.kappa) omd *= prm_.kappa / rho;
                    om = static_cast<S>(omd);
                    backend::axpby(-om, t, S(1), r);
                    backend::axpby(om, v, S(1), x);
                    normr = backend::norm2(r);
                    ++rep.iters;
                }
            }

            if (broke) {
                if (restarts >= 1) {
                    rep.breakdown = true;
                    break;
                }
                ++restarts;
                need_init = true;
                backend::residual(f, A, x, r);
                normr = backend::norm2(r);
            }
        }

        rep.relres = detail::true_relres(A, f, x, normf);
        rep.converged = rep.relres <= prm_.tol;
        return rep;
    }

    Footprint footprint() const {
        // r, v, t, w plus 3s shadow, G and U vectors
        return {0, (4 + 3 * static_cast<std::size_t>(prm_.s)) * n_ * sizeof(R)};
    }

  private:
    void shadow_space(std::vector<std::vector<R>> &Pv, std::uint64_t seed) const {
        using S = scalar_type;
        std::mt19937_64 rng(seed);
        for (auto &p : Pv) detail::fill_random(p, rng);
        for (std::size_t i = 0; i < Pv.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                const S a = backend::inner_product(Pv[j], Pv[i]);
                backend::axpby(-a, Pv[j], S(1), Pv[i]);
            }
            const S nrm = backend::norm2(Pv[i]);
            backend::axpby(S(1) / nrm, Pv[i], S(0), Pv[i]);
        }
    }

    Index n_;
    params prm_;
};

/// Right-preconditioned restarted GMRES(M) with modified Gram-Schmidt and
/// Givens rotations.
template <typename R>
class Gmres {
  public:
    using rhs_type = R;
    using scalar_type = math::scalar_of<R>;
    using params = IterParams;

    Gmres(Index n, const params &prm = params{}) : n_(n), prm_(prm) { prm_.validate(); }

    const params &parameters() const { return prm_; }

    template <typename Matrix, typename Precond>
    SolveReport operator()(const Matrix &A, const Precond &P, const std::vector<R> &f, std::vector<R> &x) const {
        using S = scalar_type;
        const int M = prm_.M;
        SolveReport rep;
        if (f.size() != n_ || A.rows() != n_ || A.cols() != n_)
            fail(ErrorKind::DimensionMismatch, "gmres: dimension mismatch");
        if (x.size() != n_) x.assign(n_, math::zero<R>());

        const double normf = backend::norm2(f);
        if (normf == 0) {
            backend::clear(x);
            rep.converged = true;
            return rep;
        }
        const double eps = prm_.tol * normf;

        std::vector<std::vector<R>> Vb(M + 1, std::vector<R>(n_));
        std::vector<R> z(n_), w(n_);
        std::vector<double> H((M + 1) * M), cs(M), sn(M), g(M + 1), y(M);

        backend::residual(f, A, x, Vb[0]);
        double beta = backend::norm2(Vb[0]);

        while (beta > eps && rep.iters < prm_.maxiter) {
            backend::axpby(static_cast<S>(1 / beta), Vb[0], S(0), Vb[0]);
            std::fill(g.begin(), g.end(), 0.0);
            g[0] = beta;

            int j = 0;
            for (; j < M && rep.iters < prm_.maxiter; ++j) {
                P.apply(Vb[j], z);
                backend::spmv(S(1), A, z, S(0), w);
                for (int i = 0; i <= j; ++i) {
                    const double h = backend::inner_product(w, Vb[i]);
                    H[i * M + j] = h;
                    backend::axpby(static_cast<S>(-h), Vb[i], S(1), w);
                }
                const double hn = backend::norm2(w);
                H[(j + 1) * M + j] = hn;
                if (hn != 0) backend::axpby(static_cast<S>(1 / hn), w, S(0), Vb[j + 1]);

                for (int i = 0; i < j; ++i) {
                    const double a = H[i * M + j], b = H[(i + 1) * M + j];
                    H[i * M + j] = cs[i] * a + sn[i] * b;
                    H[(i + 1) * M + j] = -sn[i] * a + cs[i] * b;
                }
                const double a = H[j * M + j], b = H[(j + 1) * M + j];
                const double d = std::hypot(a, b);
                cs[j] = d == 0 ? 1 : a / d;
                sn[j] = d == 0 ? 0 : b / d;
                H[j * M + j] = d;
                H[(j + 1) * M + j] = 0;
                g[j + 1] = -sn[j] * g[j];
                g[j] = cs[j] * g[j];
                ++rep.iters;

                if (std::abs(g[j + 1]) <= eps || hn == 0) {
                    ++j;
                    break;
                }
            }

            for (int i = j; i-- > 0;) {
                double sum = g[i];
                for (int k = i + 1; k < j; ++k) sum -= H[i * M + k] * y[k];
                y[i] = H[i * M + i] == 0 ? 0 : sum / H[i * M + i];
            }
            backend::clear(w);
            for (int i = 0; i < j; ++i) backend::axpby(static_cast<S>(y[i]), Vb[i], S(1), w);
            P.apply(w, z);
            backend::axpby(S(1), z, S(1), x);

            backend::residual(f, A, x, Vb[0]);
            const double prev = beta;
            beta = backend::norm2(Vb[0]);
            if (beta > eps && prev - beta < 1e-14 * prev) {
                rep.stagnation = true;
                break;
            }
        }

        rep.relres = detail::true_relres(A, f, x, normf);
        rep.converged = rep.relres <= prm_.tol;
        return rep;
    }

    Footprint footprint() const {
        return {0, (static_cast<std::size_t>(prm_.M) + 3) * n_ * sizeof(R)};
    }

  private:
    Index n_;
    params prm_;
};

/// A single application of the preconditioner.
template <typename R>
class PreOnly {
  public:
    using rhs_type = R;
    using params = IterParams;

    PreOnly(Index n, const params &prm = params{}) : n_(n), prm_(prm) {}

    template <typename Matrix, typename Precond>
    SolveReport operator()(const Matrix &, const Precond &P, const std::vector<R> &f, std::vector<R> &x) const {
        if (f.size() != n_) fail(ErrorKind::DimensionMismatch, "preonly: dimension mismatch");
        P.apply(f, x);
        SolveReport rep;
        rep.iters = 1;
        return rep;
    }

    Footprint footprint() const { return {}; }

  private:
    Index n_;
    params prm_;
};

/// Composes a preconditioner with an iterative solver.
template <typename Precond, template <typename> class Solver>
class MakeSolver {
  public:
    using value_type = typename Precond::value_type;
    using rhs_type = math::rhs_of<value_type>;
    using precond_type = Precond;
    using solver_type = Solver<rhs_type>;

    struct params {
        typename Precond::params precond{};
        IterParams solver{};
    };

    MakeSolver(const CsrMatrix<value_type> &A, const params &prm = params{})
        : P_(A, prm.precond), S_(A.rows(), prm.solver), A_(&P_.system_matrix()) {}

    /// Adopts an existing preconditioner (e.g. one converted from another
    /// precision).
    MakeSolver(Precond P, const IterParams &prm)
        : P_(std::move(P)), S_(P_.system_matrix().rows(), prm), A_(&P_.system_matrix()) {}

    MakeSolver(const MakeSolver &) = delete;
    MakeSolver &operator=(const MakeSolver &) = delete;

    /// Solves A x = f with x as the initial guess.
    SolveReport operator()(const std::vector<rhs_type> &f, std::vector<rhs_type> &x) const {
        return S_(*A_, P_, f, x);
    }

    /// Use as a nested preconditioner: x = solve(f) from a zero start.
    void apply(const std::vector<rhs_type> &f, std::vector<rhs_type> &x) const {
        x.assign(f.size(), math::zero<rhs_type>());
        S_(*A_, P_, f, x);
    }

    const Precond &precond() const { return P_; }
    const solver_type &solver() const { return S_; }
    const CsrMatrix<value_type> &system_matrix() const { return *A_; }

    Footprint footprint() const { return P_.footprint() + S_.footprint(); }

  private:
    Precond P_;
    solver_type S_;
    const CsrMatrix<value_type> *A_;
};

/// Preconditioner that does nothing; used to run unpreconditioned solves.
template <typename V>
struct Identity {
    using value_type = V;
    using rhs_type = math::rhs_of<V>;
    void apply(const std::vector<rhs_type> &f, std::vector<rhs_type> &x) const { x = f; }
};

} // namespace saddle::krylov
