#include "saddle/schur.hpp"

#include <algorithm>
#include <span>
#include <string>

#include "saddle/backend.hpp"
#include "saddle/krylov.hpp"

namespace saddle::schur {

namespace {

std::vector<bool> invert(const std::vector<bool> &m) {
    std::vector<bool> r(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) r[i] = !m[i];
    return r;
}

[[noreturn]] void rethrow_stage(const char *stage, const Error &e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
}

/// Runs a preconditioner of value type V on scalar double vectors. Setup
/// happens in double precision; for single precision the finished
/// preconditioner is narrowed afterwards.
template <template <typename> class Precond, typename V>
class NestedAdapter final : public NestedSolver {
  public:
    using R = math::rhs_of<V>;
    using T = math::scalar_of<V>;
    using Vd = math::rebind<V, double>;
    static constexpr int B = math::block_size<V>;
    using Solver = krylov::MakeSolver<Precond<V>, krylov::PreOnly>;

    NestedAdapter(const CsrMatrix<double> &A, const typename Precond<Vd>::params &prm)
        : n_(A.rows()), solver_(build(A, prm), krylov::IterParams{}) {}

    Index rows() const override { return n_; }
    Index operator_rows() const override { return solver_.system_matrix().rows(); }

    void apply(const std::vector<double> &rhs, std::vector<double> &x) const override {
        auto f = gather_values<R>(std::span<const double>(rhs));
        std::vector<R> y(f.size());
        solver_.apply(f, y);
        x.resize(n_);
        scatter_values(y, std::span<double>(x));
    }

    Footprint footprint() const override {
        // two work vectors in the nested value type per application
        return solver_.footprint() + Footprint{0, 2 * static_cast<std::size_t>(n_ / B) * sizeof(R)};
    }

  private:
    static Precond<V> build(const CsrMatrix<double> &A, const typename Precond<Vd>::params &prm) {
        auto make_double = [&]() {
            if constexpr (B == 1) return Precond<Vd>(A, prm);
            else return Precond<Vd>(to_block<B>(A), prm);
        };
        if constexpr (std::is_same_v<T, double>) return make_double();
        else return Precond<V>(make_double());
    }

    Index n_;
    Solver solver_;
};

template <typename V> using UPrecond = amg::Amg<V, relax::Ilut>;
template <typename V> using PPrecond = relax::AsPreconditioner<V, relax::Spai0>;

} // namespace

SaddleSplit split_system(const CsrMatrix<double> &A, const std::vector<bool> &pmask) {
    if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "split: matrix is not square");
    if (pmask.size() != A.rows()) fail(ErrorKind::DimensionMismatch, "split: pressure mask length mismatch");
    const auto np = static_cast<std::size_t>(std::count(pmask.begin(), pmask.end(), true));
    if (np == 0 || np == pmask.size())
        fail(ErrorKind::EmptySelection, "split: pressure mask must select some but not all unknowns");

    const auto umask = invert(pmask);
    SaddleSplit s;
    s.pmask = pmask;
    for (Index i = 0; i < pmask.size(); ++i) (pmask[i] ? s.p_index : s.u_index).push_back(i);
    s.Ac = submatrix(A, umask, umask);
    s.BcT = submatrix(A, umask, pmask);
    s.Bc = submatrix(A, pmask, umask);
    s.C = submatrix(A, pmask, pmask);
    return s;
}

CsrMatrix<double> reassemble(const SaddleSplit &s) {
    std::vector<Triplet<double>> trip;
    auto put = [&](const CsrMatrix<double> &M, const std::vector<Index> &rmap, const std::vector<Index> &cmap) {
        for (Index i = 0; i < M.rows(); ++i)
            for (Index j = M.row_begin(i); j < M.row_end(i); ++j) trip.push_back({rmap[i], cmap[M.col()[j]], M.val()[j]});
    };
    put(s.Ac, s.u_index, s.u_index);
    put(s.BcT, s.u_index, s.p_index);
    put(s.Bc, s.p_index, s.u_index);
    put(s.C, s.p_index, s.p_index);
    return build_csr<double>(s.n(), s.n(), trip);
}

CsrMatrix<double> approx_schur(const SaddleSplit &s, SchurVariant variant) {
    const auto dinv = diagonal(s.Ac, true);
    const Index np = s.np();

    if (variant == SchurVariant::Full) {
        // C - B_c D^-1 B_c^T
        std::vector<Index> ptr(s.BcT.ptr());
        std::vector<Index> col(s.BcT.col());
        std::vector<double> val(s.BcT.val());
        for (Index i = 0; i < s.BcT.rows(); ++i)
            for (Index j = ptr[i]; j < ptr[i + 1]; ++j) val[j] *= dinv[i];
        const auto BDB = product(s.Bc, CsrMatrix<double>(s.BcT.rows(), s.BcT.cols(), std::move(ptr), std::move(col),
                                                          std::move(val)));
        std::vector<Triplet<double>> trip;
        trip.reserve(s.C.nnz() + BDB.nnz());
        for (Index i = 0; i < np; ++i) {
            for (Index j = s.C.row_begin(i); j < s.C.row_end(i); ++j) trip.push_back({i, s.C.col()[j], s.C.val()[j]});
            for (Index j = BDB.row_begin(i); j < BDB.row_end(i); ++j) trip.push_back({i, BDB.col()[j], -BDB.val()[j]});
        }
        return build_csr<double>(np, np, trip);
    }

    // diag(B_c D^-1 B_c^T)_i = sum_k B_c(i,k) d_k B_c^T(k,i): merge row i of
    // B_c with column i of B_c^T.
    const auto Bt_t = transpose(s.BcT);
    std::vector<double> corr(np, 0.0);
    for (Index i = 0; i < np; ++i) {
        Index a = s.Bc.row_begin(i), ae = s.Bc.row_end(i);
        Index b = Bt_t.row_begin(i), be = Bt_t.row_end(i);
        double sum = 0;
        while (a < ae && b < be) {
            const Index ca = s.Bc.col()[a], cb = Bt_t.col()[b];
            if (ca < cb) ++a;
            else if (cb < ca) ++b;
            else {
                sum += s.Bc.val()[a] * dinv[ca] * Bt_t.val()[b];
                ++a;
                ++b;
            }
        }
        corr[i] = sum;
    }

    std::vector<Triplet<double>> trip;
    trip.reserve(s.C.nnz() + np);
    for (Index i = 0; i < np; ++i) {
        for (Index j = s.C.row_begin(i); j < s.C.row_end(i); ++j) trip.push_back({i, s.C.col()[j], s.C.val()[j]});
        trip.push_back({i, i, -corr[i]});
    }
    return build_csr<double>(np, np, trip);
}

std::unique_ptr<NestedSolver> make_usolver(const CsrMatrix<double> &Ac, const SchurConfig &cfg) {
    const UPrecond<double>::params prm{cfg.u_amg, cfg.u_relax};
    const bool single = cfg.nested_precision == Precision::Single;
    switch (cfg.u_block_size) {
        case 1:
            if (single) return std::make_unique<NestedAdapter<UPrecond, float>>(Ac, prm);
            return std::make_unique<NestedAdapter<UPrecond, double>>(Ac, prm);
        case 2:
            if (single) return std::make_unique<NestedAdapter<UPrecond, Block<float, 2>>>(Ac, prm);
            return std::make_unique<NestedAdapter<UPrecond, Block<double, 2>>>(Ac, prm);
        case 3:
            if (single) return std::make_unique<NestedAdapter<UPrecond, Block<float, 3>>>(Ac, prm);
            return std::make_unique<NestedAdapter<UPrecond, Block<double, 3>>>(Ac, prm);
        case 4:
            if (single) return std::make_unique<NestedAdapter<UPrecond, Block<float, 4>>>(Ac, prm);
            return std::make_unique<NestedAdapter<UPrecond, Block<double, 4>>>(Ac, prm);
        default:
            fail(ErrorKind::InvalidArgument, "velocity block size must be in 1..4");
    }
}

std::unique_ptr<NestedSolver> make_psolver(const CsrMatrix<double> &S, const SchurConfig &cfg) {
    if (cfg.nested_precision == Precision::Single)
        return std::make_unique<NestedAdapter<PPrecond, float>>(S, relax::Spai0Params{});
    return std::make_unique<NestedAdapter<PPrecond, double>>(S, relax::Spai0Params{});
}

SchurPressureCorrection::SchurPressureCorrection(const CsrMatrix<double> &A, const std::vector<bool> &pmask,
                                                 const SchurConfig &cfg)
    : A_(A) {
    setup(pmask, cfg.variant, [&](const CsrMatrix<double> &M) { return make_usolver(M, cfg); },
          [&](const CsrMatrix<double> &M) { return make_psolver(M, cfg); });
}

SchurPressureCorrection::SchurPressureCorrection(const CsrMatrix<double> &A, const std::vector<bool> &pmask,
                                                 SchurVariant variant, const NestedFactory &uf,
                                                 const NestedFactory &pf)
    : A_(A) {
    setup(pmask, variant, uf, pf);
}

void SchurPressureCorrection::setup(const std::vector<bool> &pmask, SchurVariant variant, const NestedFactory &uf,
                                    const NestedFactory &pf) {
    SaddleSplit split;
    try {
        split = split_system(A_, pmask);
    } catch (const Error &e) {
        rethrow_stage("split", e);
    }

    CsrMatrix<double> S;
    try {
        S = approx_schur(split, variant);
    } catch (const Error &e) {
        rethrow_stage("schur", e);
    }

    try {
        usolver_ = uf(split.Ac);
    } catch (const Error &e) {
        rethrow_stage("usolver", e);
    }

    try {
        psolver_ = pf(S);
    } catch (const Error &e) {
        rethrow_stage("psolver", e);
    }

    u_index_ = std::move(split.u_index);
    p_index_ = std::move(split.p_index);
    Bc_ = std::move(split.Bc);
    BcT_ = std::move(split.BcT);
}

void SchurPressureCorrection::apply(const std::vector<double> &rhs, std::vector<double> &x) const {
    const Index nu = u_index_.size(), np = p_index_.size();
    if (rhs.size() != nu + np) fail(ErrorKind::DimensionMismatch, "schur: rhs length mismatch");

    std::vector<double> ru(nu), rp(np), u(nu), p(np);
    for (Index i = 0; i < nu; ++i) ru[i] = rhs[u_index_[i]];
    for (Index i = 0; i < np; ++i) rp[i] = rhs[p_index_[i]];

    // u* = Au^-1 r_u; r_p' = r_p - B_c u*
    usolver_->apply(ru, u);
    backend::spmv(-1.0, Bc_, u, 1.0, rp);
    // p = S^-1 r_p'
    psolver_->apply(rp, p);
    // r_u' = r_u - B_c^T p; u = Au^-1 r_u'
    backend::spmv(-1.0, BcT_, p, 1.0, ru);
    usolver_->apply(ru, u);

    x.resize(nu + np);
    for (Index i = 0; i < nu; ++i) x[u_index_[i]] = u[i];
    for (Index i = 0; i < np; ++i) x[p_index_[i]] = p[i];
}

SchurFootprint SchurPressureCorrection::breakdown() const {
    SchurFootprint f;
    f.usolver = usolver_->footprint();
    f.psolver = psolver_->footprint();
    f.coupling = Bc_.bytes().footprint() + BcT_.bytes().footprint() +
                 Footprint{(u_index_.size() + p_index_.size()) * sizeof(Index), 0};
    return f;
}

} // namespace saddle::schur
