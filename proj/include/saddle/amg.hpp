#pragma once

// Aggregation-based algebraic multigrid: strength of connection, greedy
// aggregation, tentative and smoothed prolongation, Galerkin coarse
// operators and the V-cycle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "saddle/backend.hpp"
#include "saddle/dense.hpp"
#include "saddle/error.hpp"
#include "saddle/relax.hpp"
#include "saddle/sparse.hpp"
#include "saddle/values.hpp"

namespace saddle::amg {

enum class Coarsening { Plain, Smoothed };

struct AmgParams {
    double eps_strong = 1e-3;
    Coarsening coarsening = Coarsening::Smoothed;
    /// Prolongator damping; the effective weight is omega / rho(D^-1 A_F).
    double omega = 0.72;
    int npre = 1;
    int npost = 1;
    /// Largest coarsest level, counted in scalar unknowns.
    Index coarse_enough = 3000;
    int max_levels = 20;
    std::uint64_t seed = 1234;
};

/// Symmetric strength-of-connection graph without self loops.
struct StrengthGraph {
    Index n = 0;
    std::vector<Index> ptr;
    std::vector<Index> col;

    Index degree(Index i) const { return ptr[i + 1] - ptr[i]; }
};

/// Per-entry mask over A (true for strong off-diagonal entries) together
/// with the symmetric graph used for aggregation.
struct Strength {
    std::vector<bool> mask;
    StrengthGraph graph;
};

/// Edge (i, j), i != j, is strong iff |a_ij|^2 > eps^2 |a_ii| |a_jj|, with
/// block values measured by the Frobenius norm. The relation is closed under
/// symmetry.
template <typename V>
Strength strength_graph(const CsrMatrix<V> &A, double eps_strong) {
    if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "strength: matrix is not square");
    if (!(eps_strong >= 0 && eps_strong < 1)) fail(ErrorKind::InvalidArgument, "strength: eps_strong must be in [0,1)");
    const Index n = A.rows();

    std::vector<double> dia(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j)
            if (A.col()[j] == i) dia[i] = static_cast<double>(math::norm(A.val()[j]));
        if (dia[i] == 0) fail(ErrorKind::ZeroDiagonal, "strength: zero diagonal in row " + std::to_string(i));
    }

    const double eps2 = eps_strong * eps_strong;
    std::vector<Triplet<char>> edges;
    for (Index i = 0; i < n; ++i)
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
            const Index c = A.col()[j];
            if (c == i) continue;
            const double a = static_cast<double>(math::norm(A.val()[j]));
            if (a * a > eps2 * dia[i] * dia[c]) {
                edges.push_back({i, c, 1});
                edges.push_back({c, i, 1});
            }
        }

    Strength s;
    s.graph.n = n;
    s.graph.ptr.assign(n + 1, 0);
    for (const auto &e : edges) ++s.graph.ptr[e.row + 1];
    for (Index i = 0; i < n; ++i) s.graph.ptr[i + 1] += s.graph.ptr[i];
    {
        std::vector<Index> col(edges.size());
        std::vector<Index> pos(s.graph.ptr.begin(), s.graph.ptr.end() - 1);
        for (const auto &e : edges) col[pos[e.row]++] = e.col;
        // sort and deduplicate each row
        std::vector<Index> ptr(n + 1, 0), out;
        out.reserve(col.size());
        for (Index i = 0; i < n; ++i) {
            auto b = col.begin() + static_cast<std::ptrdiff_t>(s.graph.ptr[i]);
            auto e = col.begin() + static_cast<std::ptrdiff_t>(s.graph.ptr[i + 1]);
            std::sort(b, e);
            for (auto it = b; it != e; ++it)
                if (it == b || *it != *(it - 1)) out.push_back(*it);
            ptr[i + 1] = out.size();
        }
        s.graph.ptr = std::move(ptr);
        s.graph.col = std::move(out);
    }

    s.mask.assign(A.nnz(), false);
    for (Index i = 0; i < n; ++i) {
        auto b = s.graph.col.begin() + static_cast<std::ptrdiff_t>(s.graph.ptr[i]);
        auto e = s.graph.col.begin() + static_cast<std::ptrdiff_t>(s.graph.ptr[i + 1]);
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j)
            s.mask[j] = std::binary_search(b, e, A.col()[j]);
    }
    return s;
}

struct Aggregates {
    static constexpr Index dropped = ~Index(0);

    std::vector<Index> id; ///< aggregate per node, or `dropped` for isolated nodes
    Index count = 0;
};

/// Greedy root-based aggregation in ascending node order. A node with no
/// aggregated strong neighbour becomes a root and absorbs its strong
/// neighbours; remaining nodes join the aggregate of their first aggregated
/// strong neighbour. Nodes without strong edges are left out of the coarse
/// space.
inline Aggregates aggregate(const StrengthGraph &g) {
    constexpr Index unset = Aggregates::dropped - 1;
    Aggregates agg;
    agg.id.assign(g.n, unset);

    for (Index i = 0; i < g.n; ++i) {
        if (g.degree(i) == 0) {
            agg.id[i] = Aggregates::dropped;
            continue;
        }
        if (agg.id[i] != unset) continue;
        bool free = true;
        for (Index j = g.ptr[i]; j < g.ptr[i + 1] && free; ++j)
            if (agg.id[g.col[j]] != unset) free = false;
        if (!free) continue;
        const Index cur = agg.count++;
        agg.id[i] = cur;
        for (Index j = g.ptr[i]; j < g.ptr[i + 1]; ++j) agg.id[g.col[j]] = cur;
    }

    const std::vector<Index> first_pass = agg.id;
    for (Index i = 0; i < g.n; ++i) {
        if (agg.id[i] != unset) continue;
        for (Index j = g.ptr[i]; j < g.ptr[i + 1]; ++j) {
            const Index a = first_pass[g.col[j]];
            if (a != unset && a != Aggregates::dropped) {
                agg.id[i] = a;
                break;
            }
        }
    }
    return agg;
}

/// P_tent(i, agg(i)) = identity; rows of dropped nodes are empty.
template <typename V>
CsrMatrix<V> tentative_prolongator(const Aggregates &agg) {
    const Index n = agg.id.size();
    std::vector<Index> ptr(n + 1, 0), col;
    std::vector<V> val;
    for (Index i = 0; i < n; ++i) {
        if (agg.id[i] < agg.count) {
            col.push_back(agg.id[i]);
            val.push_back(math::identity<V>());
        }
        ptr[i + 1] = col.size();
    }
    return CsrMatrix<V>(n, agg.count, std::move(ptr), std::move(col), std::move(val));
}

/// A restricted to strong entries; weak off-diagonal entries are lumped into
/// the diagonal.
template <typename V>
CsrMatrix<V> filtered_matrix(const CsrMatrix<V> &A, const std::vector<bool> &strong) {
    const Index n = A.rows();
    std::vector<Index> ptr(n + 1, 0), col;
    std::vector<V> val;
    for (Index i = 0; i < n; ++i) {
        V dia = math::zero<V>();
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j)
            if (A.col()[j] == i || !strong[j]) dia += A.val()[j];
        for (Index j = A.row_begin(i); j < A.row_end(i); ++j) {
            const Index c = A.col()[j];
            if (c == i) {
                col.push_back(c);
                val.push_back(dia);
            } else if (strong[j]) {
                col.push_back(c);
                val.push_back(A.val()[j]);
            }
        }
        ptr[i + 1] = col.size();
    }
    return CsrMatrix<V>(n, A.cols(), std::move(ptr), std::move(col), std::move(val));
}

/// Spectral radius estimate of D^{-1} A by a fixed number of power
/// iterations from a seeded random start.
template <typename V>
double spectral_radius(const CsrMatrix<V> &A, const std::vector<V> &dinv, int iters, std::uint64_t seed) {
    using R = math::rhs_of<V>;
    using S = math::scalar_of<V>;
    constexpr int B = math::block_size<V>;
    const Index n = A.rows();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    std::vector<R> x(n), y(n);
    for (auto &v : x) {
        if constexpr (B == 1) v = static_cast<S>(dist(rng));
        else
            for (int k = 0; k < B; ++k) v(k) = static_cast<S>(dist(rng));
    }
    double nx = backend::norm2(x);
    if (nx == 0) return 1;
    backend::axpby(static_cast<S>(1 / nx), x, S(0), x);

    double rho = 0;
    for (int it = 0; it < iters; ++it) {
        backend::spmv(S(1), A, x, S(0), y);
        backend::vmul(S(1), dinv, y, S(0), x);
        rho = backend::norm2(x);
        if (rho == 0) return 1;
        backend::axpby(static_cast<S>(1 / rho), x, S(0), x);
    }
    return rho;
}

/// P = (I - w D^{-1} A_F) P_tent with w = omega / rho(D^{-1} A_F).
template <typename V>
CsrMatrix<V> smooth_prolongator(const CsrMatrix<V> &Af, const CsrMatrix<V> &Ptent, double omega,
                                std::uint64_t seed = 1234) {
    using S = math::scalar_of<V>;
    if (omega == 0) return Ptent;
    const auto dinv = diagonal(Af, true);
    const double rho = spectral_radius(Af, dinv, 5, seed);
    const S w = static_cast<S>(omega / rho);

    // AP = D^{-1} A_F P_tent, then P = P_tent - w * AP.
    auto AP = product(Af, Ptent);
    std::vector<Index> ptr(AP.ptr());
    std::vector<Index> col(AP.col());
    std::vector<V> val(AP.val());
    for (Index i = 0; i < AP.rows(); ++i)
        for (Index j = ptr[i]; j < ptr[i + 1]; ++j) val[j] = (-w) * (dinv[i] * val[j]);

    // add P_tent (its pattern is contained in AP's pattern for rows with a
    // diagonal entry, but merge generically)
    std::vector<Triplet<V>> trip;
    trip.reserve(val.size() + Ptent.nnz());
    for (Index i = 0; i < AP.rows(); ++i) {
        for (Index j = ptr[i]; j < ptr[i + 1]; ++j) trip.push_back({i, col[j], val[j]});
        for (Index j = Ptent.row_begin(i); j < Ptent.row_end(i); ++j)
            trip.push_back({i, Ptent.col()[j], Ptent.val()[j]});
    }
    return build_csr<V>(Ptent.rows(), Ptent.cols(), trip);
}

/// Galerkin coarse operator P^T A P.
template <typename V>
CsrMatrix<V> galerkin(const CsrMatrix<V> &A, const CsrMatrix<V> &P) {
    if (A.cols() != P.rows() || A.rows() != P.rows()) fail(ErrorKind::DimensionMismatch, "galerkin: dimension mismatch");
    return product(transpose(P), product(A, P));
}

template <typename RelaxParams>
struct HierarchyParams {
    AmgParams amg{};
    RelaxParams relax{};
};

/// Multigrid hierarchy applied as a V(npre, npost) cycle from a zero
/// initial guess. The coarsest level is solved with dense LU, unless
/// coarsening stalled above `coarse_enough`, in which case the smoother is
/// applied there instead.
template <typename V, template <typename> class Relax>
class Amg {
  public:
    using value_type = V;
    using rhs_type = math::rhs_of<V>;
    using scalar_type = math::scalar_of<V>;
    using relax_type = Relax<V>;

    using params = HierarchyParams<typename Relax<V>::params>;

    struct Level {
        CsrMatrix<V> A;
        CsrMatrix<V> P;
        CsrMatrix<V> R;
        std::optional<Relax<V>> relax;
    };

    explicit Amg(const CsrMatrix<V> &A, const params &prm = params{}) : prm_(prm) { build(A); }

    /// Copies a hierarchy built in another precision.
    template <typename W>
    explicit Amg(const Amg<W, Relax> &o) : prm_(o.parameters()) {
        using T = math::scalar_of<V>;
        for (const auto &l : o.levels()) {
            Level mine{convert_precision<T>(l.A), convert_precision<T>(l.P), convert_precision<T>(l.R), std::nullopt};
            if (l.relax) mine.relax.emplace(*l.relax);
            levels_.push_back(std::move(mine));
        }
        if (o.coarse_solver()) coarse_.emplace(*o.coarse_solver());
    }

    const params &parameters() const { return prm_; }
    const std::vector<Level> &levels() const { return levels_; }
    const std::optional<DenseLU<scalar_type>> &coarse_solver() const { return coarse_; }
    const CsrMatrix<V> &system_matrix() const { return levels_.front().A; }

    std::size_t depth() const { return levels_.size(); }

    std::vector<Index> level_sizes() const {
        std::vector<Index> s;
        for (const auto &l : levels_) s.push_back(l.A.rows());
        return s;
    }

    /// x = one V-cycle applied to rhs.
    void apply(const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const {
        if (rhs.size() != levels_.front().A.rows()) fail(ErrorKind::DimensionMismatch, "amg: rhs length mismatch");
        x.assign(rhs.size(), math::zero<rhs_type>());
        cycle(0, rhs, x);
    }

    Footprint footprint() const {
        Footprint f;
        for (const auto &l : levels_) {
            f += l.A.bytes().footprint();
            if (l.P.rows()) f += l.P.bytes().footprint() + l.R.bytes().footprint();
            if (l.relax) f += l.relax->footprint();
        }
        if (coarse_) f += coarse_->footprint();
        return f;
    }

  private:
    void build(const CsrMatrix<V> &A) {
        const auto &ap = prm_.amg;
        if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "amg: matrix is not square");
        if (ap.npre < 0 || ap.npost < 0 || ap.npre + ap.npost < 1)
            fail(ErrorKind::InvalidArgument, "amg: need npre + npost >= 1");
        constexpr Index B = math::block_size<V>;

        CsrMatrix<V> cur = A;
        while (true) {
            const Index n = cur.rows();
            const bool last_allowed = static_cast<int>(levels_.size()) + 1 >= ap.max_levels;
            if (n * B <= ap.coarse_enough || last_allowed) {
                levels_.push_back(Level{std::move(cur), {}, {}, std::nullopt});
                break;
            }

            auto strength = strength_graph(cur, ap.eps_strong);
            auto agg = aggregate(strength.graph);
            if (agg.count == 0 || agg.count >= n) {
                levels_.push_back(Level{std::move(cur), {}, {}, std::nullopt});
                break;
            }

            auto P = tentative_prolongator<V>(agg);
            if (ap.coarsening == Coarsening::Smoothed)
                P = smooth_prolongator(filtered_matrix(cur, strength.mask), P, ap.omega, ap.seed);
            auto R = transpose(P);
            auto Ac = product(R, product(cur, P));

            Level l{std::move(cur), std::move(P), std::move(R), std::nullopt};
            l.relax.emplace(l.A, prm_.relax);
            levels_.push_back(std::move(l));
            cur = std::move(Ac);
        }

        auto &last = levels_.back();
        if (last.A.rows() * B <= ap.coarse_enough) {
            try {
                coarse_.emplace(last.A);
            } catch (const Error &e) {
                fail(ErrorKind::SetupFailure, std::string("amg: coarse factorization failed: ") + e.what());
            }
        } else {
            last.relax.emplace(last.A, prm_.relax);
        }
    }

    void cycle(std::size_t l, const std::vector<rhs_type> &rhs, std::vector<rhs_type> &x) const {
        const auto &lvl = levels_[l];
        if (l + 1 == levels_.size()) {
            if (coarse_) coarse_->solve(rhs, x);
            else {
                std::vector<rhs_type> tmp(rhs.size());
                for (int k = 0; k < prm_.amg.npre + prm_.amg.npost; ++k) lvl.relax->apply_pre(lvl.A, rhs, x, tmp);
            }
            return;
        }

        const scalar_type one(1);
        std::vector<rhs_type> tmp(rhs.size());
        for (int k = 0; k < prm_.amg.npre; ++k) lvl.relax->apply_pre(lvl.A, rhs, x, tmp);

        backend::residual(rhs, lvl.A, x, tmp);
        std::vector<rhs_type> fc(lvl.R.rows()), uc(lvl.R.rows(), math::zero<rhs_type>());
        backend::spmv(one, lvl.R, tmp, scalar_type(0), fc);
        cycle(l + 1, fc, uc);
        backend::spmv(one, lvl.P, uc, one, x);

        for (int k = 0; k < prm_.amg.npost; ++k) lvl.relax->apply_post(lvl.A, rhs, x, tmp);
    }

    params prm_;
    std::vector<Level> levels_;
    std::optional<DenseLU<scalar_type>> coarse_;
};

} // namespace saddle::amg
