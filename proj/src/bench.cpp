#include "saddle/bench.hpp"

#include <charconv>
#include <chrono>
#include <cmath>

#include "saddle/io.hpp"

namespace saddle::bench {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
}

nlohmann::json footprint_json(const Footprint &f) {
    return {{"index_bytes", f.index}, {"value_bytes", f.values}, {"total_bytes", f.total()}};
}

template <typename Precond>
RunReport solve_with(const Problem &pb, const SolverConfig &cfg, Precond &&make, std::vector<double> *solution) {
    RunReport rep;
    rep.solver_id = cfg.id;
    rep.dofs = pb.A.rows();
    rep.nnz = pb.A.nnz();
    rep.memory.matrix_bytes = pb.A.bytes().total();

    auto t0 = clock::now();
    const auto P = make();
    const krylov::IdrS<double> idr(pb.A.rows(), cfg.outer);
    rep.setup_seconds = seconds_since(t0);

    std::vector<double> x(pb.A.rows(), 0.0);
    t0 = clock::now();
    const auto r = idr(pb.A, P, pb.rhs, x);
    rep.solve_seconds = seconds_since(t0);

    rep.iters = r.iters;
    rep.relres = r.relres;
    rep.converged = r.converged;
    rep.breakdown = r.breakdown;
    rep.memory.preconditioner = P.footprint();
    rep.memory.preconditioner_bytes = rep.memory.preconditioner.total();
    rep.memory.vectors_bytes = idr.footprint().total() + 2 * vector_footprint(x).total();
    if constexpr (std::is_same_v<std::decay_t<decltype(P)>, schur::SchurPressureCorrection>)
        rep.memory.schur = P.breakdown();

    if (pb.exact && pb.pmask) rep.errors = stokes::relative_errors(x, *pb.exact, *pb.pmask);
    if (solution) *solution = std::move(x);
    return rep;
}

} // namespace

SolverId parse_solver_id(std::string_view s) {
    if (s == "v1") return SolverId::V1;
    if (s == "v2") return SolverId::V2;
    if (s == "v3") return SolverId::V3;
    if (s == "v4") return SolverId::V4;
    if (s == "custom") return SolverId::Custom;
    fail(ErrorKind::InvalidArgument, "unknown solver id '" + std::string(s) + "'");
}

std::string to_string(SolverId id) {
    switch (id) {
        case SolverId::V1: return "v1";
        case SolverId::V2: return "v2";
        case SolverId::V3: return "v3";
        case SolverId::V4: return "v4";
        case SolverId::Custom: return "custom";
    }
    return "?";
}

SolverConfig preset(SolverId id) {
    SolverConfig c;
    c.id = id;
    c.outer.s = 5;
    switch (id) {
        case SolverId::V1:
            c.precond = Preconditioner::Ilu;
            c.ilu.k = 1;
            break;
        case SolverId::V2:
        case SolverId::Custom:
            break;
        case SolverId::V3:
            c.schur.u_block_size = 3;
            break;
        case SolverId::V4:
            c.schur.u_block_size = 3;
            c.schur.nested_precision = schur::Precision::Single;
            break;
    }
    return c;
}

int parse_cube(std::string_view spec) {
    constexpr std::string_view prefix = "cube:";
    if (spec.substr(0, prefix.size()) != prefix)
        fail(ErrorKind::InvalidArgument, "problem must look like cube:N");
    const auto digits = spec.substr(prefix.size());
    int n = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc{} || end != digits.data() + digits.size())
        fail(ErrorKind::InvalidArgument, "problem must look like cube:N");
    if (n < 2) fail(ErrorKind::InvalidSize, "cube size must be at least 2");
    return n;
}

Problem generate(int n, double eps_stab) {
    auto st = stokes::assemble(n, 1.0, eps_stab);
    Problem pb;
    pb.source = "cube:" + std::to_string(n);
    pb.exact = st.exact();
    pb.A = std::move(st.A);
    pb.rhs = std::move(st.rhs);
    pb.pmask = std::move(st.pmask);
    return pb;
}

Problem load(const std::filesystem::path &matrix, const std::filesystem::path &rhs,
             const std::optional<std::filesystem::path> &pmask, const std::optional<std::filesystem::path> &exact) {
    Problem pb;
    pb.source = matrix.string();
    pb.A = io::read_matrix(matrix);
    pb.rhs = io::read_vector(rhs);
    if (pb.A.rows() != pb.A.cols()) fail(ErrorKind::DimensionMismatch, "matrix is not square");
    if (pb.rhs.size() != pb.A.rows()) fail(ErrorKind::DimensionMismatch, "rhs length does not match the matrix");
    if (pmask) {
        pb.pmask = io::read_mask(*pmask);
        if (pb.pmask->size() != pb.A.rows()) fail(ErrorKind::DimensionMismatch, "pmask length does not match the matrix");
    }
    if (exact) {
        pb.exact = io::read_vector(*exact);
        if (pb.exact->size() != pb.A.rows())
            fail(ErrorKind::DimensionMismatch, "exact solution length does not match the matrix");
    }
    return pb;
}

RunReport run(const Problem &pb, const SolverConfig &cfg, std::vector<double> *solution) {
    if (cfg.precond == Preconditioner::Ilu) {
        return solve_with(
            pb, cfg, [&] { return relax::AsPreconditioner<double, relax::Iluk>(pb.A, cfg.ilu); }, solution);
    }
    if (!pb.pmask) fail(ErrorKind::InvalidArgument, "Schur pressure correction needs a pressure mask");
    return solve_with(
        pb, cfg, [&] { return schur::SchurPressureCorrection(pb.A, *pb.pmask, cfg.schur); }, solution);
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["solver_id"] = to_string(solver_id);
    j["dofs"] = dofs;
    j["nnz"] = nnz;
    j["iters"] = iters;
    j["relres"] = relres;
    j["converged"] = converged;
    j["breakdown"] = breakdown;
    j["setup_seconds"] = setup_seconds;
    j["solve_seconds"] = solve_seconds;

    nlohmann::json mem{{"matrix_bytes", memory.matrix_bytes},
                       {"preconditioner_bytes", memory.preconditioner_bytes},
                       {"vectors_bytes", memory.vectors_bytes},
                       {"preconditioner", footprint_json(memory.preconditioner)}};
    if (memory.schur) {
        mem["schur"] = {{"usolver", footprint_json(memory.schur->usolver)},
                        {"psolver", footprint_json(memory.schur->psolver)},
                        {"coupling", footprint_json(memory.schur->coupling)}};
    }
    j["memory"] = std::move(mem);

    if (errors) j["errors"] = {{"velocity", errors->velocity}, {"pressure", errors->pressure}};
    else j["errors"] = nullptr;
    return j;
}

void dump(const stokes::StokesProblem &pb, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    io::write_matrix(dir / "A.mtx", pb.A);
    io::write_vector(dir / "b.mtx", pb.rhs);
    io::write_mask(dir / "pmask.mtx", pb.pmask);
    io::write_vector(dir / "x_exact.mtx", pb.exact());
}

} // namespace saddle::bench
