#pragma once

// Dense reference path for the penalised control problem: assemble G column by column
// from basis vectors and solve (G + eps I) x = -u_free(T) by Gaussian elimination with
// partial pivoting. Only meant for small grids.

#include <chemosteer/hum.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace chemosteer {

/// Row-major n x n matrix.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    explicit DenseMatrix(std::size_t size = 0) : n(size), a(size * size, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) noexcept { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return a[i * n + j]; }
};

inline DenseMatrix assemble_gramian(const Gramian& g) {
    const std::size_t n = g.domain().n_cells();
    DenseMatrix m(n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const std::vector<double> col = g.apply(e);
        for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i];
        e[j] = 0.0;
    }
    return m;
}

inline std::vector<double> solve_dense(DenseMatrix m, std::vector<double> rhs) {
    const std::size_t n = m.n;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        }
        if (m(piv, col) == 0.0) throw SolverError("dense solve: singular matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m(col, c), m(piv, c));
            std::swap(rhs[col], rhs[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = m(r, col) / m(col, col);
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) m(r, c) -= factor * m(col, c);
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= m(i, c) * x[c];
        x[i] = s / m(i, i);
    }
    return x;
}

/// phi_T from the dense route.
inline std::vector<double> dense_penalized_terminal(std::span<const double> u0, const DriftField& b,
                                                    const WeightTables& weights, const DomainSpec& domain,
                                                    const TimeGrid& time, double epsilon) {
    const Gramian g(b, weights, domain, time);
    DenseMatrix m = assemble_gramian(g);
    for (std::size_t i = 0; i < m.n; ++i) m(i, i) += epsilon;
    const SpaceTimeField u_free = solve_forward(u0, b, domain, time);
    const auto last = u_free.level(time.n_steps());
    std::vector<double> rhs(last.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -last[i];
    return solve_dense(std::move(m), std::move(rhs));
}

}  // namespace chemosteer
