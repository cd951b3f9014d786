#pragma once

// Manufactured-solution Stokes problem on the unit cube, discretized with
// collocated central finite differences and pressure stabilization.

#include <array>
#include <vector>

#include "saddle/sparse.hpp"

namespace saddle::stokes {

struct FieldSample {
    std::array<double, 3> u; ///< velocity
    double p;                ///< pressure
};

/// Rotating flow with p = sin(pi x) sin(pi y) sin(pi z) - 8 / pi^3.
FieldSample analytic_solution(double x, double y, double z);

/// Body force that makes analytic_solution satisfy -mu lap(u) + grad(p) = f.
std::array<double, 3> forcing(double x, double y, double z, double mu = 1.0);

/// Assembled system. Unknowns: velocities first (node-major, three
/// components per node), then pressures (node-major). Nodes are the n^3
/// interior grid points ordered lexicographically with x fastest.
struct StokesProblem {
    int n = 0;
    double h = 0;
    double mu = 1;
    double eps_stab = 0.1;
    CsrMatrix<double> A;
    std::vector<double> rhs;
    std::vector<bool> pmask;

    Index nodes() const { return Index(n) * n * n; }
    Index velocity_dofs() const { return 3 * nodes(); }
    Index dofs() const { return 4 * nodes(); }

    std::array<double, 3> coords(Index node) const;
    /// Analytic solution sampled at the grid nodes, in the unknown layout.
    std::vector<double> exact() const;
};

/// Momentum rows: -mu * (7-point Laplacian) u_c + central grad p = f_c.
/// Continuity rows: central div u - eps_stab * h^2 * (7-point Neumann Laplacian) p = 0.
/// Dirichlet velocities are eliminated into the right-hand side, boundary
/// pressure gradients use one-sided second-order differences, and the first
/// pressure node is pinned to the analytic value.
StokesProblem assemble(int n, double mu = 1.0, double eps_stab = 0.1);

struct ErrorNorms {
    double velocity = 0; ///< relative discrete L2 error
    double pressure = 0; ///< relative discrete L2 error after removing the mean difference
};

ErrorNorms error_norms(const StokesProblem &problem, const std::vector<double> &x);

/// Same norms for an arbitrary split: velocity is every unknown outside pmask.
ErrorNorms relative_errors(const std::vector<double> &x, const std::vector<double> &exact,
                           const std::vector<bool> &pmask);

} // namespace saddle::stokes
