#pragma once

// Schur complement pressure correction for saddle-point systems
//
//     [ A_c   B_c^T ] [u]   [r_u]
//     [ B_c   C     ] [p] = [r_p]
//
// The velocity (U) and pressure (P) solvers are nested single-application
// solvers, so the composite preconditioner is linear. The U solver may run
// on a block-valued copy of A_c and either nested solver may store its data
// in single precision; the outer vectors always stay in double precision.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "saddle/amg.hpp"
#include "saddle/relax.hpp"
#include "saddle/sparse.hpp"

namespace saddle::schur {

/// The four blocks of a saddle-point matrix split by a pressure mask.
struct SaddleSplit {
    std::vector<bool> pmask;
    std::vector<Index> u_index; ///< full-system index of each velocity unknown
    std::vector<Index> p_index; ///< full-system index of each pressure unknown
    CsrMatrix<double> Ac;       ///< velocity-velocity
    CsrMatrix<double> BcT;      ///< velocity rows, pressure columns
    CsrMatrix<double> Bc;       ///< pressure rows, velocity columns
    CsrMatrix<double> C;        ///< pressure-pressure

    Index nu() const { return u_index.size(); }
    Index np() const { return p_index.size(); }
    Index n() const { return pmask.size(); }
};

SaddleSplit split_system(const CsrMatrix<double> &A, const std::vector<bool> &pmask);

/// Reassembles the full matrix from its four blocks.
CsrMatrix<double> reassemble(const SaddleSplit &split);

enum class SchurVariant {
    Diag, ///< S = C - diag(B_c diag(A_c)^-1 B_c^T)
    Full, ///< S = C - B_c diag(A_c)^-1 B_c^T
};

CsrMatrix<double> approx_schur(const SaddleSplit &split, SchurVariant variant);

enum class Precision { Double, Single };

/// Nested solver acting on double precision scalar vectors.
class NestedSolver {
  public:
    virtual ~NestedSolver() = default;
    virtual Index rows() const = 0;
    virtual void apply(const std::vector<double> &rhs, std::vector<double> &x) const = 0;
    virtual Footprint footprint() const = 0;
    /// Rows of the operator the solver works on (block rows for block solvers).
    virtual Index operator_rows() const { return rows(); }
};

using NestedFactory = std::function<std::unique_ptr<NestedSolver>(const CsrMatrix<double> &)>;

struct SchurConfig {
    SchurVariant variant = SchurVariant::Diag; ///< `adjust_p`
    int u_block_size = 1;                      ///< 1 or 3
    Precision nested_precision = Precision::Double;
    amg::AmgParams u_amg = [] {
        amg::AmgParams p;
        p.coarsening = amg::Coarsening::Plain;
        return p;
    }();
    relax::IlutParams u_relax{};
};

/// AMG(aggregation, ILUT) + preonly on A_c.
std::unique_ptr<NestedSolver> make_usolver(const CsrMatrix<double> &Ac, const SchurConfig &cfg);

/// SPAI0 + preonly on the approximate Schur complement.
std::unique_ptr<NestedSolver> make_psolver(const CsrMatrix<double> &S, const SchurConfig &cfg);

struct SchurFootprint {
    Footprint usolver;
    Footprint psolver;
    Footprint coupling; ///< B_c, B_c^T and index maps

    Footprint total() const { return usolver + psolver + coupling; }
    Footprint nested() const { return usolver + psolver; }
};

class SchurPressureCorrection {
  public:
    using value_type = double;
    using rhs_type = double;
    using params = SchurConfig;

    SchurPressureCorrection(const CsrMatrix<double> &A, const std::vector<bool> &pmask, const SchurConfig &cfg);

    /// Uses caller supplied nested solver factories.
    SchurPressureCorrection(const CsrMatrix<double> &A, const std::vector<bool> &pmask, SchurVariant variant,
                            const NestedFactory &ufactory, const NestedFactory &pfactory);

    /// z = M^{-1} r via the five-step pressure correction.
    void apply(const std::vector<double> &rhs, std::vector<double> &x) const;

    const CsrMatrix<double> &system_matrix() const { return A_; }
    const NestedSolver &usolver() const { return *usolver_; }
    const NestedSolver &psolver() const { return *psolver_; }
    Index nu() const { return u_index_.size(); }
    Index np() const { return p_index_.size(); }

    SchurFootprint breakdown() const;
    Footprint footprint() const { return breakdown().total(); }

  private:
    void setup(const std::vector<bool> &pmask, SchurVariant variant, const NestedFactory &uf, const NestedFactory &pf);

    CsrMatrix<double> A_;
    std::vector<Index> u_index_, p_index_;
    CsrMatrix<double> Bc_, BcT_;
    std::unique_ptr<NestedSolver> usolver_, psolver_;
};

} // namespace saddle::schur
