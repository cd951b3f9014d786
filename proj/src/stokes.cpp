#include "saddle/stokes.hpp"

#include <cmath>
#include <numbers>

namespace saddle::stokes {

namespace {
constexpr double pi = std::numbers::pi;
}

FieldSample analytic_solution(double x, double y, double z) {
    const double sx = std::sin(pi * x), sy = std::sin(pi * y), sz = std::sin(pi * z);
    const double cx = std::cos(pi * x), cy = std::cos(pi * y), cz = std::cos(pi * z);
    return {{pi * (sx * cy - sx * cz), pi * (sy * cz - sy * cx), pi * (sz * cx - sz * cy)},
            sx * sy * sz - 8 / (pi * pi * pi)};
}

std::array<double, 3> forcing(double x, double y, double z, double mu) {
    const double sx = std::sin(pi * x), sy = std::sin(pi * y), sz = std::sin(pi * z);
    const double cx = std::cos(pi * x), cy = std::cos(pi * y), cz = std::cos(pi * z);
    const double k = 2 * pi * pi * mu;
    return {pi * (k * (sx * cy - sx * cz) + cx * sy * sz), pi * (k * (sy * cz - sy * cx) + sx * cy * sz),
            pi * (k * (sz * cx - sz * cy) + sx * sy * cz)};
}

std::array<double, 3> StokesProblem::coords(Index node) const {
    const Index i = node % n, j = (node / n) % n, k = node / (Index(n) * n);
    return {double(i + 1) * h, double(j + 1) * h, double(k + 1) * h};
}

std::vector<double> StokesProblem::exact() const {
    std::vector<double> x(dofs());
    const Index N = nodes();
    for (Index node = 0; node < N; ++node) {
        const auto c = coords(node);
        const auto s = analytic_solution(c[0], c[1], c[2]);
        for (int d = 0; d < 3; ++d) x[3 * node + d] = s.u[d];
        x[3 * N + node] = s.p;
    }
    return x;
}

StokesProblem assemble(int n, double mu, double eps_stab) {
    if (n < 2) fail(ErrorKind::InvalidSize, "stokes: need at least 2 interior nodes per axis");
    if (!(mu > 0) || !(eps_stab >= 0)) fail(ErrorKind::InvalidArgument, "stokes: need mu > 0 and eps_stab >= 0");

    StokesProblem pb;
    pb.n = n;
    pb.h = 1.0 / (n + 1);
    pb.mu = mu;
    pb.eps_stab = eps_stab;

    const Index N = pb.nodes();
    const double h = pb.h, h2 = h * h;
    auto node = [n](Index i, Index j, Index k) { return i + Index(n) * (j + Index(n) * k); };
    auto uidx = [](Index nd, int c) { return 3 * nd + Index(c); };
    auto pidx = [N](Index nd) { return 3 * N + nd; };

    const double p0 = analytic_solution(h, h, h).p;
    std::vector<Triplet<double>> trip;
    trip.reserve(N * 40);
    pb.rhs.assign(pb.dofs(), 0.0);

    for (Index k = 0; k < Index(n); ++k)
        for (Index j = 0; j < Index(n); ++j)
            for (Index i = 0; i < Index(n); ++i) {
                const Index P = node(i, j, k);
                const std::array<Index, 3> ijk{i, j, k};
                const std::array<double, 3> x{double(i + 1) * h, double(j + 1) * h, double(k + 1) * h};
                const auto f = forcing(x[0], x[1], x[2], mu);

                // Neighbour in direction d, side s; false when it lies on the boundary.
                auto neighbour = [&](int d, int s, Index &q, std::array<double, 3> &xq) {
                    auto m = ijk;
                    xq = x;
                    xq[d] += s * h;
                    if ((s < 0 && m[d] == 0) || (s > 0 && m[d] + 1 == Index(n))) return false;
                    m[d] += s;
                    q = node(m[0], m[1], m[2]);
                    return true;
                };

                // Momentum.
                for (int c = 0; c < 3; ++c) {
                    const Index row = uidx(P, c);
                    trip.push_back({row, row, 6 * mu / h2});
                    pb.rhs[row] += f[c];
                    for (int d = 0; d < 3; ++d)
                        for (int s : {-1, 1}) {
                            Index q;
                            std::array<double, 3> xq;
                            if (neighbour(d, s, q, xq)) trip.push_back({row, uidx(q, c), -mu / h2});
                            else pb.rhs[row] += mu / h2 * analytic_solution(xq[0], xq[1], xq[2]).u[c];
                        }

                    // d p / d x_c
                    const Index m = ijk[c];
                    auto at = [&](Index mm) {
                        auto t = ijk;
                        t[c] = mm;
                        return pidx(node(t[0], t[1], t[2]));
                    };
                    if (m > 0 && m + 1 < Index(n)) {
                        trip.push_back({row, at(m + 1), 1 / (2 * h)});
                        trip.push_back({row, at(m - 1), -1 / (2 * h)});
                    } else if (n == 2) {
                        trip.push_back({row, at(1), 1 / h});
                        trip.push_back({row, at(0), -1 / h});
                    } else if (m == 0) {
                        trip.push_back({row, at(0), -3 / (2 * h)});
                        trip.push_back({row, at(1), 4 / (2 * h)});
                        trip.push_back({row, at(2), -1 / (2 * h)});
                    } else {
                        trip.push_back({row, at(m), 3 / (2 * h)});
                        trip.push_back({row, at(m - 1), -4 / (2 * h)});
                        trip.push_back({row, at(m - 2), 1 / (2 * h)});
                    }
                }

                // Continuity.
                const Index row = pidx(P);
                if (P == 0) {
                    trip.push_back({row, row, 1.0});
                    pb.rhs[row] = p0;
                    continue;
                }
                for (int d = 0; d < 3; ++d)
                    for (int s : {-1, 1}) {
                        Index q;
                        std::array<double, 3> xq;
                        const double w = s / (2 * h);
                        if (neighbour(d, s, q, xq)) {
                            trip.push_back({row, uidx(q, d), w});
                            trip.push_back({row, row, eps_stab});
                            // the pinned pressure goes to the rhs so C stays symmetric
                            if (q == 0) pb.rhs[row] += eps_stab * p0;
                            else trip.push_back({row, pidx(q), -eps_stab});
                        } else {
                            pb.rhs[row] -= w * analytic_solution(xq[0], xq[1], xq[2]).u[d];
                        }
                    }
            }

    pb.A = build_csr<double>(pb.dofs(), pb.dofs(), trip);
    pb.pmask.assign(pb.dofs(), false);
    for (Index nd = 0; nd < N; ++nd) pb.pmask[pidx(nd)] = true;
    return pb;
}

ErrorNorms error_norms(const StokesProblem &pb, const std::vector<double> &x) {
    return relative_errors(x, pb.exact(), pb.pmask);
}

ErrorNorms relative_errors(const std::vector<double> &x, const std::vector<double> &ex,
                           const std::vector<bool> &pmask) {
    if (x.size() != ex.size() || x.size() != pmask.size())
        fail(ErrorKind::DimensionMismatch, "error norms: length mismatch");

    double eu = 0, nu2 = 0, mean = 0;
    std::size_t np = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (pmask[i]) {
            mean += x[i] - ex[i];
            ++np;
        } else {
            eu += (x[i] - ex[i]) * (x[i] - ex[i]);
            nu2 += ex[i] * ex[i];
        }
    }
    if (np == 0 || np == x.size()) fail(ErrorKind::EmptySelection, "error norms: degenerate pressure mask");
    mean /= double(np);

    double ep = 0, np2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (pmask[i]) {
            const double d = x[i] - ex[i] - mean;
            ep += d * d;
            np2 += ex[i] * ex[i];
        }
    return {std::sqrt(eu / nu2), std::sqrt(ep / np2)};
}

} // namespace saddle::stokes
