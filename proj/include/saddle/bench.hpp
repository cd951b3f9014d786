#pragma once

// Benchmark harness: named solver configurations, problem sources and the
// JSON run report.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "saddle/krylov.hpp"
#include "saddle/relax.hpp"
#include "saddle/schur.hpp"
#include "saddle/sparse.hpp"
#include "saddle/stokes.hpp"

namespace saddle::bench {

inline constexpr int schema_version = 1;

enum class SolverId { V1, V2, V3, V4, Custom };

SolverId parse_solver_id(std::string_view s);
std::string to_string(SolverId id);

enum class Preconditioner { Ilu, Schur };

struct SolverConfig {
    SolverId id = SolverId::V2;
    krylov::IterParams outer{}; ///< IDR(5)
    Preconditioner precond = Preconditioner::Schur;
    relax::IlukParams ilu{};
    schur::SchurConfig schur{};
};

/// v1: IDR(5) + ILU(1)
/// v2: IDR(5) + SchurPC(AMG + ILUT on A_c, SPAI0 on S)
/// v3: v2 with 3x3 block values in the velocity solver
/// v4: v3 with single precision nested solvers
/// custom: v2 defaults, meant to be adjusted field by field.
SolverConfig preset(SolverId id);

struct Problem {
    std::string source;
    CsrMatrix<double> A;
    std::vector<double> rhs;
    std::optional<std::vector<bool>> pmask;
    std::optional<std::vector<double>> exact; ///< reference solution for error norms
};

/// Parses "cube:N".
int parse_cube(std::string_view spec);

Problem generate(int n, double eps_stab = 0.1);
Problem load(const std::filesystem::path &matrix, const std::filesystem::path &rhs,
             const std::optional<std::filesystem::path> &pmask,
             const std::optional<std::filesystem::path> &exact = std::nullopt);

struct MemoryReport {
    std::size_t matrix_bytes = 0;
    std::size_t preconditioner_bytes = 0;
    std::size_t vectors_bytes = 0;
    Footprint preconditioner{};
    std::optional<schur::SchurFootprint> schur;
};

struct RunReport {
    SolverId solver_id = SolverId::V2;
    Index dofs = 0;
    Index nnz = 0;
    std::size_t iters = 0;
    double relres = 0;
    bool converged = false;
    bool breakdown = false;
    double setup_seconds = 0;
    double solve_seconds = 0;
    MemoryReport memory;
    std::optional<stokes::ErrorNorms> errors;

    nlohmann::json to_json() const;
};

RunReport run(const Problem &problem, const SolverConfig &cfg, std::vector<double> *solution = nullptr);

/// Writes A.mtx, b.mtx, pmask.mtx and x_exact.mtx.
void dump(const stokes::StokesProblem &problem, const std::filesystem::path &dir);

} // namespace saddle::bench
