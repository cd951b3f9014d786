#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "saddle/amg.hpp"
#include "saddle/backend.hpp"
#include "saddle/krylov.hpp"

using namespace saddle;
using namespace saddle::amg;

namespace {

std::vector<std::vector<Index>> groups(const Aggregates &agg) {
    std::vector<std::vector<Index>> g(agg.count);
    for (Index i = 0; i < agg.id.size(); ++i)
        if (agg.id[i] != Aggregates::dropped) g[agg.id[i]].push_back(i);
    return g;
}

template <typename Relax = relax::Spai0<double>>
using Params = HierarchyParams<typename Relax::params>;

Params<> small_coarse(Coarsening c, Index coarse_enough) {
    Params<> p;
    p.amg.coarsening = c;
    p.amg.coarse_enough = coarse_enough;
    return p;
}

} // namespace

TEST(Strength, Examples) {
    std::mt19937_64 rng(61);
    const auto A = oracle::random_sparse(12, 12, 0.3, rng, 4.0);
    const auto s0 = strength_graph(A, 0.0);
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j)
            if (A.col()[j] != i && A.val()[j] != 0) EXPECT_TRUE(s0.mask[j]);

    const auto D = strength_graph(CsrMatrix<double>::identity(5), 1e-3);
    for (Index i = 0; i < 5; ++i) EXPECT_EQ(D.graph.degree(i), 0u);

    const auto P = strength_graph(oracle::poisson1d(9), 1e-3);
    for (Index i = 0; i < 9; ++i) EXPECT_EQ(P.graph.degree(i), (i == 0 || i == 8) ? 1u : 2u);
}

TEST(Strength, ThresholdAndSymmetricClosure) {
    // a_01 strong relative to the diagonals, a_10 weak: closure keeps the edge both ways
    const std::vector<Triplet<double>> t{{0, 0, 1.0}, {0, 1, 0.5}, {1, 0, 1e-9}, {1, 1, 1.0}, {2, 2, 1.0}, {2, 1, 1e-4}};
    const auto s = strength_graph(build_csr<double>(3, 3, t), 1e-3);
    EXPECT_EQ(s.graph.degree(0), 1u);
    EXPECT_EQ(s.graph.degree(1), 1u);
    EXPECT_EQ(s.graph.degree(2), 0u);
}

TEST(Strength, ZeroDiagonal) {
    const std::vector<Triplet<double>> t{{0, 1, 1.0}, {1, 1, 1.0}};
    EXPECT_THROW(strength_graph(build_csr<double>(2, 2, t), 1e-3), Error);
}

TEST(Aggregate, Poisson1D) {
    const auto agg = aggregate(strength_graph(oracle::poisson1d(9), 1e-3).graph);
    EXPECT_EQ(agg.count, 3u);
    // ascending greedy pass: roots 0, 3, 6; node 8 joins its neighbour's aggregate
    EXPECT_EQ(groups(agg), (std::vector<std::vector<Index>>{{0, 1}, {2, 3, 4}, {5, 6, 7, 8}}));
}

TEST(Aggregate, IsolatedAndFullyConnected) {
    const auto iso = aggregate(strength_graph(CsrMatrix<double>::identity(6), 1e-3).graph);
    EXPECT_EQ(iso.count, 0u);
    for (auto id : iso.id) EXPECT_EQ(id, Aggregates::dropped);

    oracle::Dense D(7, 7);
    for (auto &v : D.a) v = -1;
    for (int i = 0; i < 7; ++i) D(i, i) = 7;
    const auto full = aggregate(strength_graph(oracle::from_dense(D), 1e-3).graph);
    EXPECT_EQ(full.count, 1u);
}

TEST(Aggregate, EveryConnectedNodeAssigned) {
    const auto A = oracle::poisson(7, 3);
    const auto agg = aggregate(strength_graph(A, 1e-3).graph);
    for (auto id : agg.id) EXPECT_LT(id, agg.count);
    for (const auto &g : groups(agg)) EXPECT_FALSE(g.empty());
}

TEST(Tentative, Examples) {
    const auto agg = aggregate(strength_graph(oracle::poisson1d(9), 1e-3).graph);
    const auto P = tentative_prolongator<double>(agg);
    EXPECT_EQ(P.rows(), 9u);
    EXPECT_EQ(P.cols(), 3u);
    EXPECT_EQ(P.nnz(), 9u);
    for (double v : P.val()) EXPECT_EQ(v, 1.0);

    const auto PtP = oracle::matmul(oracle::transpose(oracle::to_dense(P)), oracle::to_dense(P));
    const auto g = groups(agg);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) EXPECT_EQ(PtP(i, j), i == j ? double(g[i].size()) : 0.0);

    Aggregates one;
    one.id.assign(4, 0);
    one.count = 1;
    const auto P1 = oracle::to_dense(tentative_prolongator<double>(one));
    for (int i = 0; i < 4; ++i) EXPECT_EQ(P1(i, 0), 1.0);

    Aggregates some;
    some.id = {0, Aggregates::dropped, 0};
    some.count = 1;
    const auto P2 = tentative_prolongator<double>(some);
    EXPECT_EQ(P2.row_end(1) - P2.row_begin(1), 0u);
}

TEST(Smooth, ZeroWeightKeepsTentative) {
    const auto A = oracle::poisson1d(9);
    const auto s = strength_graph(A, 1e-3);
    const auto Pt = tentative_prolongator<double>(aggregate(s.graph));
    const auto P = smooth_prolongator(filtered_matrix(A, s.mask), Pt, 0.0);
    EXPECT_EQ(oracle::max_rel_diff(oracle::to_dense(P), oracle::to_dense(Pt)), 0.0);
}

TEST(Smooth, InteriorRowSumsPreserved) {
    const auto A = oracle::poisson1d(9);
    const auto s = strength_graph(A, 1e-3);
    const auto Pt = tentative_prolongator<double>(aggregate(s.graph));
    const auto P = oracle::to_dense(smooth_prolongator(filtered_matrix(A, s.mask), Pt, 0.72));
    for (int i = 1; i < 8; ++i) {
        double sum = 0;
        for (int j = 0; j < 3; ++j) sum += P(i, j);
        EXPECT_NEAR(sum, 1.0, 1e-14) << "row " << i;
    }
}

TEST(Smooth, MatchesDenseOracle) {
    std::mt19937_64 rng(62);
    const auto A = oracle::random_sparse(6, 6, 0.5, rng, 4.0);
    const auto s = strength_graph(A, 1e-3);
    Aggregates agg;
    agg.id = {0, 0, 1, 1, 2, 2};
    agg.count = 3;
    const auto Pt = tentative_prolongator<double>(agg);
    const auto Af = filtered_matrix(A, s.mask);
    const auto P = smooth_prolongator(Af, Pt, 0.72, 7);

    const auto dinv = diagonal(Af, true);
    const double w = 0.72 / spectral_radius(Af, dinv, 5, 7);
    auto S = oracle::to_dense(Af);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) S(i, j) = (i == j ? 1.0 : 0.0) - w * dinv[i] * S(i, j);
    EXPECT_LT(oracle::max_rel_diff(oracle::matmul(S, oracle::to_dense(Pt)), oracle::to_dense(P)), 1e-14);
}

TEST(Smooth, FilteredMatrixLumpsWeakEntries) {
    const std::vector<Triplet<double>> t{{0, 0, 2.0}, {0, 1, -1.0}, {0, 2, -1e-6}, {1, 0, -1.0}, {1, 1, 2.0},
                                         {2, 0, -1e-6}, {2, 2, 2.0}};
    const auto A = build_csr<double>(3, 3, t);
    const auto s = strength_graph(A, 1e-3);
    const auto F = oracle::to_dense(filtered_matrix(A, s.mask));
    EXPECT_EQ(F(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(F(0, 0), 2.0 - 1e-6);
    EXPECT_DOUBLE_EQ(F(2, 2), 2.0 - 1e-6);
    EXPECT_EQ(F(0, 1), -1.0);
}

TEST(Galerkin, Examples) {
    std::mt19937_64 rng(63);
    const auto A = oracle::random_sparse(8, 8, 0.4, rng, 3.0);
    EXPECT_LT(oracle::max_rel_diff(oracle::to_dense(galerkin(A, CsrMatrix<double>::identity(8))), oracle::to_dense(A)),
              1e-15);

    // SPD A and full-rank P: symmetric positive definite coarse operator
    oracle::Dense B(10, 10);
    std::uniform_real_distribution<double> d(-1, 1);
    for (auto &v : B.a) v = d(rng);
    auto S = oracle::matmul(B, oracle::transpose(B));
    for (int i = 0; i < 10; ++i) S(i, i) += 0.5;
    oracle::Dense Pd(10, 4);
    for (auto &v : Pd.a) v = d(rng);
    const auto Ac = oracle::to_dense(galerkin(oracle::from_dense(S), oracle::from_dense(Pd)));
    EXPECT_LT(oracle::max_rel_diff(Ac, oracle::transpose(Ac)), 1e-13);
    EXPECT_LT(oracle::max_rel_diff(Ac, oracle::matmul(oracle::transpose(Pd), oracle::matmul(S, Pd))), 1e-13);
    // Cholesky succeeds
    auto L = Ac;
    for (int k = 0; k < 4; ++k) {
        ASSERT_GT(L(k, k), 0.0);
        L(k, k) = std::sqrt(L(k, k));
        for (int i = k + 1; i < 4; ++i) L(i, k) /= L(k, k);
        for (int i = k + 1; i < 4; ++i)
            for (int j = k + 1; j <= i; ++j) L(i, j) -= L(i, k) * L(j, k);
    }

    EXPECT_THROW(galerkin(A, CsrMatrix<double>::identity(7)), Error);
}

TEST(Galerkin, PoissonAggregatesOfThree) {
    const auto A = oracle::poisson1d(9);
    Aggregates agg;
    agg.id = {0, 0, 0, 1, 1, 1, 2, 2, 2};
    agg.count = 3;
    const auto Pt = tentative_prolongator<double>(agg);
    const auto Ac = oracle::to_dense(galerkin(A, Pt));
    const auto expect = oracle::matmul(oracle::transpose(oracle::to_dense(Pt)), oracle::matmul(oracle::to_dense(A), oracle::to_dense(Pt)));
    EXPECT_LT(oracle::max_rel_diff(Ac, expect), 1e-15);
    // coarse stencil: interior aggregates couple to neighbours by -1
    EXPECT_EQ(Ac(0, 1), -1.0);
    EXPECT_EQ(Ac(1, 2), -1.0);
    EXPECT_EQ(Ac(0, 2), 0.0);
    EXPECT_EQ(Ac(1, 1), 2.0);
}

TEST(Hierarchy, SingleLevelIsDirectSolve) {
    std::mt19937_64 rng(64);
    const auto A = oracle::random_sparse(40, 40, 0.1, rng, 4.0);
    const Amg<double, relax::Spai0> amg(A);
    EXPECT_EQ(amg.depth(), 1u);
    const auto f = oracle::random_vector(40, rng);
    std::vector<double> x;
    amg.apply(f, x);
    EXPECT_LT(oracle::rel_diff(x, oracle::solve(oracle::to_dense(A), f)), 1e-12);
}

TEST(Hierarchy, Poisson1DLevelSizes) {
    const Amg<double, relax::Spai0> amg(oracle::poisson1d(729), small_coarse(Coarsening::Plain, 27));
    EXPECT_EQ(amg.level_sizes(), (std::vector<Index>{729, 243, 81, 27}));
}

TEST(Hierarchy, DiagonalMatrixStops) {
    auto p = small_coarse(Coarsening::Smoothed, 4);
    const Amg<double, relax::Spai0> amg(CsrMatrix<double>::identity(10), p);
    EXPECT_EQ(amg.depth(), 1u);
}

TEST(Hierarchy, LevelsShrinkAndMatchOracle) {
    for (auto c : {Coarsening::Plain, Coarsening::Smoothed}) {
        const auto A = oracle::poisson(5, 3);
        const Amg<double, relax::Spai0> amg(A, small_coarse(c, 10));
        const auto &lv = amg.levels();
        ASSERT_GE(lv.size(), 2u);
        for (std::size_t l = 0; l + 1 < lv.size(); ++l) {
            EXPECT_LT(lv[l + 1].A.rows(), lv[l].A.rows());
            const auto P = oracle::to_dense(lv[l].P);
            EXPECT_EQ(oracle::max_rel_diff(oracle::to_dense(lv[l].R), oracle::transpose(P)), 0.0);
            const auto expect = oracle::matmul(oracle::transpose(P), oracle::matmul(oracle::to_dense(lv[l].A), P));
            const auto Ac = oracle::to_dense(lv[l + 1].A);
            EXPECT_LT(oracle::max_rel_diff(Ac, expect), 1e-12);
            EXPECT_LE(oracle::frobenius([&] {
                          auto d = Ac;
                          for (std::size_t i = 0; i < d.n; ++i)
                              for (std::size_t j = 0; j < d.m; ++j) d(i, j) = Ac(i, j) - Ac(j, i);
                          return d;
                      }()),
                      1e-12 * oracle::frobenius(Ac));
        }
    }
}

TEST(Hierarchy, SetupFailureOnSingularCoarse) {
    const std::vector<Triplet<double>> t{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
    try {
        Amg<double, relax::Spai0>(build_csr<double>(2, 2, t));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::SetupFailure);
    }
}

TEST(VCycle, LinearAndDeterministic) {
    const auto A = oracle::poisson(12, 2);
    const Amg<double, relax::Spai0> amg(A, small_coarse(Coarsening::Smoothed, 20));
    ASSERT_GE(amg.depth(), 2u);
    std::mt19937_64 rng(65);
    const auto r = oracle::random_vector(A.rows(), rng);
    std::vector<double> r2(r), z, z2, z3;
    for (auto &v : r2) v *= 2;
    amg.apply(r, z);
    amg.apply(r2, z2);
    amg.apply(r, z3);
    for (auto &v : z) v *= 2;
    EXPECT_LT(oracle::rel_diff(z2, z), 1e-12);
    for (std::size_t i = 0; i < z3.size(); ++i) EXPECT_EQ(z3[i] * 2, z[i]);
}

TEST(VCycle, ConvergenceFactorPoisson2D) {
    const auto A = oracle::poisson(32, 2);
    const Amg<double, relax::Spai0> amg(A, small_coarse(Coarsening::Smoothed, 50));
    ASSERT_GE(amg.depth(), 2u);
    std::mt19937_64 rng(66);
    const auto f = oracle::random_vector(A.rows(), rng);
    std::vector<double> x(A.rows(), 0.0), z;
    double prev = backend::norm2(f), worst = 0;
    for (int it = 0; it < 10; ++it) {
        const auto r = backend::residual(f, A, x);
        amg.apply(r, z);
        backend::axpby(1.0, z, 1.0, x);
        const double now = backend::norm2(backend::residual(f, A, x));
        worst = std::max(worst, now / prev);
        prev = now;
    }
    EXPECT_LE(worst, 0.7);
}

TEST(VCycle, GmresPoisson3D) {
    const auto A = oracle::poisson(16, 3);
    using P = Amg<double, relax::Spai0>;
    krylov::MakeSolver<P, krylov::Gmres>::params prm;
    prm.precond = small_coarse(Coarsening::Smoothed, 100);
    prm.solver.tol = 1e-8;
    const krylov::MakeSolver<P, krylov::Gmres> solve(A, prm);
    std::vector<double> f(A.rows(), 1.0), x(A.rows(), 0.0);
    const auto rep = solve(f, x);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.iters, 30u);
}

TEST(VCycle, PreOnlyHalvesResidual) {
    const auto A = oracle::poisson(10, 3);
    using P = Amg<double, relax::Spai0>;
    krylov::MakeSolver<P, krylov::PreOnly>::params prm;
    prm.precond = small_coarse(Coarsening::Smoothed, 50);
    const krylov::MakeSolver<P, krylov::PreOnly> solve(A, prm);
    std::mt19937_64 rng(67);
    const auto f = oracle::random_vector(A.rows(), rng);
    std::vector<double> x(A.rows(), 0.0);
    const auto rep = solve(f, x);
    EXPECT_EQ(rep.iters, 1u);
    EXPECT_LE(backend::norm2(backend::residual(f, A, x)), 0.5 * backend::norm2(f));
}

template <typename V>
class AmgKinds : public ::testing::Test {};

using Kinds = ::testing::Types<double, float, Block<double, 3>, Block<float, 3>>;
TYPED_TEST_SUITE(AmgKinds, Kinds);

TYPED_TEST(AmgKinds, SmokeSolve) {
    using V = TypeParam;
    using S = math::scalar_of<V>;
    using R = math::rhs_of<V>;
    constexpr int B = math::block_size<V>;

    // three decoupled copies of a 3D Poisson problem, interleaved per node
    const auto Ad = oracle::poisson(8, 3);
    std::vector<Triplet<double>> t;
    for (Index i = 0; i < Ad.rows(); ++i)
        for (Index j = Ad.row_begin(i); j < Ad.row_end(i); ++j)
            for (int c = 0; c < 3; ++c) t.push_back({3 * i + c, 3 * Ad.col()[j] + c, Ad.val()[j]});
    const auto A3 = build_csr<double>(3 * Ad.rows(), 3 * Ad.rows(), t);

    CsrMatrix<V> A = [&] {
        if constexpr (B == 1) return convert_precision<S>(A3);
        else return convert_precision<S>(to_block<3>(A3));
    }();

    using Solver = krylov::MakeSolver<Amg<V, relax::Ilut>, krylov::Gmres>;
    typename Solver::params prm;
    prm.precond.amg.coarse_enough = 150;
    prm.precond.amg.coarsening = Coarsening::Plain;
    prm.solver.tol = std::is_same_v<S, float> ? 1e-5 : 1e-8;
    const Solver solve(A, prm);
    EXPECT_GE(solve.precond().depth(), 2u);

    std::vector<R> f(A.rows(), math::zero<R>()), x(A.rows(), math::zero<R>());
    for (auto &v : f) {
        if constexpr (B == 1) v = S(1);
        else v = R::constant(S(1));
    }
    const auto rep = solve(f, x);
    EXPECT_TRUE(rep.converged) << rep.relres;
    EXPECT_LE(rep.iters, 40u);
}
