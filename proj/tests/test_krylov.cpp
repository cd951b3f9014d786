#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "saddle/amg.hpp"
#include "saddle/backend.hpp"
#include "saddle/krylov.hpp"
#include "saddle/relax.hpp"

using namespace saddle;
using namespace saddle::krylov;

namespace {

template <template <typename> class Solver>
SolveReport solve_plain(const CsrMatrix<double> &A, const std::vector<double> &f, std::vector<double> &x,
                        IterParams prm = {}) {
    const Solver<double> s(A.rows(), prm);
    return s(A, Identity<double>{}, f, x);
}

/// Exact inverse stored densely, used as a preconditioner.
struct DenseInverse {
    using value_type = double;
    using rhs_type = double;
    oracle::Dense Ainv;
    void apply(const std::vector<double> &f, std::vector<double> &x) const { x = oracle::matvec(Ainv, f); }
};

/// Diagonal scaling by a fixed vector.
struct Scaling {
    using value_type = double;
    using rhs_type = double;
    std::vector<double> d;
    void apply(const std::vector<double> &f, std::vector<double> &x) const {
        x.resize(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) x[i] = d[i] * f[i];
    }
};

CsrMatrix<double> diagonal_matrix(const std::vector<double> &d) {
    std::vector<Triplet<double>> t;
    for (Index i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
    return build_csr<double>(d.size(), d.size(), t);
}

} // namespace

TEST(Idr, IdentityOneIteration) {
    std::mt19937_64 rng(71);
    const auto A = CsrMatrix<double>::identity(30);
    const auto f = oracle::random_vector(30, rng);
    std::vector<double> x;
    const auto rep = solve_plain<IdrS>(A, f, x);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iters, 1u);
    EXPECT_LT(oracle::rel_diff(x, f), 1e-12);
}

TEST(Idr, Poisson1DMatchesDense) {
    const auto A = oracle::poisson1d(50);
    std::vector<double> f(50, 1.0), x;
    IterParams prm;
    prm.tol = 1e-8;
    const auto rep = solve_plain<IdrS>(A, f, x, prm);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.relres, 1e-8);
    EXPECT_LT(oracle::rel_diff(x, oracle::solve(oracle::to_dense(A), f)), 1e-6);
}

TEST(Idr, DiagonalWithSpai0) {
    std::mt19937_64 rng(72);
    auto d = oracle::random_vector(40, rng, 1, 10);
    const auto A = diagonal_matrix(d);
    using S = MakeSolver<relax::AsPreconditioner<double, relax::Spai0>, IdrS>;
    const S solve(A);
    const auto f = oracle::random_vector(40, rng);
    std::vector<double> x(40, 0.0);
    const auto rep = solve(f, x);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iters, 1u);
}

TEST(Idr, ShadowDimensions) {
    std::mt19937_64 rng(73);
    const auto A = oracle::random_sparse(80, 80, 0.05, rng, 3.0);
    const auto f = oracle::random_vector(80, rng);
    const auto xd = oracle::solve(oracle::to_dense(A), f);
    for (int s : {1, 2, 4, 8}) {
        IterParams prm;
        prm.s = s;
        prm.tol = 1e-10;
        std::vector<double> x;
        const auto rep = solve_plain<IdrS>(A, f, x, prm);
        EXPECT_TRUE(rep.converged) << "s=" << s;
        EXPECT_LT(oracle::rel_diff(x, xd), 1e-8) << "s=" << s;
    }
}

TEST(Idr, BreakdownFlagged) {
    const auto A = diagonal_matrix({0.0, 0.0, 0.0});
    std::vector<double> f{1, 2, 3}, x;
    const auto rep = solve_plain<IdrS>(A, f, x);
    EXPECT_FALSE(rep.converged);
    EXPECT_TRUE(rep.breakdown);
}

TEST(Gmres, IdentityOneIteration) {
    std::mt19937_64 rng(74);
    const auto f = oracle::random_vector(25, rng);
    std::vector<double> x;
    const auto rep = solve_plain<Gmres>(CsrMatrix<double>::identity(25), f, x);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.iters, 1u);
}

TEST(Gmres, FullKrylovSpaceRandom) {
    std::mt19937_64 rng(75);
    const auto A = oracle::random_sparse(20, 20, 0.4, rng, 2.0);
    const auto f = oracle::random_vector(20, rng);
    IterParams prm;
    prm.M = 20;
    prm.tol = 1e-10;
    std::vector<double> x;
    const auto rep = solve_plain<Gmres>(A, f, x, prm);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iters, 20u);
    EXPECT_LT(oracle::rel_diff(x, oracle::solve(oracle::to_dense(A), f)), 1e-8);
}

TEST(Gmres, Restarted) {
    const auto A = oracle::poisson(10, 2);
    std::vector<double> f(A.rows(), 1.0), x;
    IterParams prm;
    prm.M = 5;
    prm.tol = 1e-8;
    const auto rep = solve_plain<Gmres>(A, f, x, prm);
    EXPECT_TRUE(rep.converged);
    EXPECT_GT(rep.iters, 5u);
}

TEST(Gmres, StagnationFlagged) {
    const auto A = diagonal_matrix({1.0, 0.0});
    std::vector<double> f{0.0, 1.0}, x;
    const auto rep = solve_plain<Gmres>(A, f, x);
    EXPECT_FALSE(rep.converged);
    EXPECT_TRUE(rep.stagnation);
}

TEST(PreOnly, IdentityAndExactInverse) {
    std::mt19937_64 rng(76);
    const auto A = oracle::random_sparse(15, 15, 0.3, rng, 3.0);
    const auto f = oracle::random_vector(15, rng);
    std::vector<double> x;
    const PreOnly<double> p(15);
    auto rep = p(A, Identity<double>{}, f, x);
    EXPECT_EQ(rep.iters, 1u);
    EXPECT_EQ(x, f);

    rep = p(A, DenseInverse{oracle::inverse(oracle::to_dense(A))}, f, x);
    EXPECT_EQ(rep.iters, 1u);
    EXPECT_LT(oracle::rel_diff(x, oracle::solve(oracle::to_dense(A), f)), 1e-12);
}

TEST(Krylov, RelresIsTrueResidual) {
    std::mt19937_64 rng(77);
    const auto A = oracle::random_sparse(60, 60, 0.08, rng, 3.0);
    const auto f = oracle::random_vector(60, rng);
    for (double tol : {1e-3, 1e-6, 1e-9}) {
        IterParams prm;
        prm.tol = tol;
        std::vector<double> x1, x2;
        const auto r1 = solve_plain<IdrS>(A, f, x1, prm);
        const auto r2 = solve_plain<Gmres>(A, f, x2, prm);
        EXPECT_NEAR(r1.relres, oracle::norm(backend::residual(f, A, x1)) / oracle::norm(f), 1e-12);
        EXPECT_NEAR(r2.relres, oracle::norm(backend::residual(f, A, x2)) / oracle::norm(f), 1e-12);
        EXPECT_EQ(r1.converged, r1.relres <= tol);
        EXPECT_EQ(r2.converged, r2.relres <= tol);
    }
}

TEST(Krylov, BitReproducible) {
    std::mt19937_64 rng(78);
    const auto A = oracle::random_sparse(100, 100, 0.05, rng, 3.0);
    const auto f = oracle::random_vector(100, rng);
    std::vector<double> a, b, c, d;
    const auto ra = solve_plain<IdrS>(A, f, a), rb = solve_plain<IdrS>(A, f, b);
    const auto rc = solve_plain<Gmres>(A, f, c), rd = solve_plain<Gmres>(A, f, d);
    EXPECT_EQ(a, b);
    EXPECT_EQ(c, d);
    EXPECT_EQ(ra.iters, rb.iters);
    EXPECT_EQ(rc.iters, rd.iters);
}

TEST(Krylov, RightPreconditionedResidual) {
    // right preconditioning tracks the unpreconditioned residual, so a badly
    // scaled preconditioner must not change the stopping test
    std::mt19937_64 rng(79);
    const auto A = oracle::random_sparse(50, 50, 0.1, rng, 3.0);
    const auto f = oracle::random_vector(50, rng);
    Scaling M{oracle::random_vector(50, rng, 1e-3, 1e3)};
    IterParams prm;
    prm.tol = 1e-8;
    std::vector<double> x, y;
    const auto ri = IdrS<double>(50, prm)(A, M, f, x);
    const auto rg = Gmres<double>(50, prm)(A, M, f, y);
    EXPECT_TRUE(ri.converged);
    EXPECT_TRUE(rg.converged);
    const auto xd = oracle::solve(oracle::to_dense(A), f);
    EXPECT_LT(oracle::rel_diff(x, xd), 1e-6);
    EXPECT_LT(oracle::rel_diff(y, xd), 1e-6);
}

TEST(Krylov, ZeroRhs) {
    const auto A = oracle::poisson1d(10);
    std::vector<double> f(10, 0.0), x(10, 5.0), y(10, 5.0);
    const auto ri = solve_plain<IdrS>(A, f, x);
    const auto rg = solve_plain<Gmres>(A, f, y);
    EXPECT_TRUE(ri.converged);
    EXPECT_TRUE(rg.converged);
    EXPECT_EQ(ri.iters, 0u);
    EXPECT_EQ(x, f);
    EXPECT_EQ(y, f);
}

TEST(Krylov, InitialGuessUsed) {
    const auto A = oracle::poisson1d(20);
    std::vector<double> f(20, 1.0);
    auto x = oracle::solve(oracle::to_dense(A), f);
    const auto rep = solve_plain<IdrS>(A, f, x);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.iters, 0u);
}

TEST(Krylov, MaxiterAndParams) {
    const auto A = oracle::poisson1d(200);
    std::vector<double> f(200, 1.0), x;
    IterParams prm;
    prm.maxiter = 3;
    prm.tol = 1e-12;
    const auto rep = solve_plain<IdrS>(A, f, x, prm);
    EXPECT_FALSE(rep.converged);
    EXPECT_LE(rep.iters, 3u);

    IterParams bad;
    bad.tol = 0;
    EXPECT_THROW(IdrS<double>(3, bad), Error);
    bad = {};
    bad.s = 0;
    EXPECT_THROW(IdrS<double>(3, bad), Error);
    bad = {};
    bad.M = 0;
    EXPECT_THROW(Gmres<double>(3, bad), Error);

    std::vector<double> g(5, 1.0);
    EXPECT_THROW(solve_plain<IdrS>(A, g, x), Error);
}

TEST(Krylov, NestedApplyIsLinear) {
    const auto A = oracle::poisson(6, 3);
    using S = MakeSolver<amg::Amg<double, relax::Spai0>, PreOnly>;
    S::params prm;
    prm.precond.amg.coarse_enough = 20;
    const S solve(A, prm);
    std::mt19937_64 rng(80);
    const auto a = oracle::random_vector(A.rows(), rng), b = oracle::random_vector(A.rows(), rng);
    std::vector<double> ab(a.size()), za, zb, zab;
    for (std::size_t i = 0; i < a.size(); ++i) ab[i] = 2 * a[i] - 3 * b[i];
    solve.apply(a, za);
    solve.apply(b, zb);
    solve.apply(ab, zab);
    for (std::size_t i = 0; i < a.size(); ++i) za[i] = 2 * za[i] - 3 * zb[i];
    EXPECT_LT(oracle::rel_diff(zab, za), 1e-12);
}

template <typename V>
class KrylovKinds : public ::testing::Test {};

using Kinds = ::testing::Types<double, float, Block<double, 3>, Block<float, 3>>;
TYPED_TEST_SUITE(KrylovKinds, Kinds);

TYPED_TEST(KrylovKinds, BothSolversConverge) {
    using V = TypeParam;
    using S = math::scalar_of<V>;
    using R = math::rhs_of<V>;
    constexpr int B = math::block_size<V>;
    std::mt19937_64 rng(81);
    const auto Ad = oracle::random_sparse(60, 60, 0.1, rng, 4.0);
    const CsrMatrix<V> A = [&] {
        if constexpr (B == 1) return convert_precision<S>(Ad);
        else return convert_precision<S>(to_block<B>(Ad));
    }();
    std::vector<R> f(A.rows(), math::zero<R>());
    const auto fd = oracle::random_vector(60, rng);
    for (Index i = 0; i < A.rows(); ++i) {
        if constexpr (B == 1) f[i] = static_cast<S>(fd[i]);
        else
            for (int k = 0; k < B; ++k) f[i](k) = static_cast<S>(fd[B * i + k]);
    }
    IterParams prm;
    prm.tol = std::is_same_v<S, float> ? 1e-5 : 1e-10;
    using P = relax::AsPreconditioner<V, relax::Spai0>;
    const MakeSolver<P, IdrS> idr(A, {{}, prm});
    const MakeSolver<P, Gmres> gm(A, {{}, prm});
    std::vector<R> x(A.rows(), math::zero<R>()), y(A.rows(), math::zero<R>());
    const auto ri = idr(f, x);
    const auto rg = gm(f, y);
    EXPECT_TRUE(ri.converged) << ri.relres;
    EXPECT_TRUE(rg.converged) << rg.relres;
}
