#pragma once

#include <chemosteer/error.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace chemosteer {

/// Tridiagonal matrix with sub(i) = A(i, i-1), diag(i) = A(i, i), super(i) = A(i, i+1).
/// sub[0] and super[n-1] are unused.
struct Tridiagonal {
    std::vector<double> sub, diag, super;

    explicit Tridiagonal(std::size_t n = 0) : sub(n, 0.0), diag(n, 0.0), super(n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

    [[nodiscard]] Tridiagonal transposed() const {
        Tridiagonal t(size());
        t.diag = diag;
        for (std::size_t i = 0; i + 1 < size(); ++i) {
            t.super[i] = sub[i + 1];
            t.sub[i + 1] = super[i];
        }
        return t;
    }

    void multiply(std::span<const double> x, std::span<double> y) const noexcept {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += sub[i] * x[i - 1];
            if (i + 1 < n) s += super[i] * x[i + 1];
            y[i] = s;
        }
    }
};

/// Thomas elimination without pivoting. Stable for matrices diagonally dominant by
/// rows or by columns, which covers every system assembled in this library.
/// `rhs` is overwritten with the solution.
inline void solve_tridiagonal(const Tridiagonal& a, std::span<double> rhs) {
    const std::size_t n = a.size();
    std::vector<double> c(n);
    double pivot = a.diag[0];
    if (!(std::isfinite(pivot) && pivot != 0.0)) {
        throw SolverError("tridiagonal solve: zero or non-finite pivot at row 0");
    }
    c[0] = n > 1 ? a.super[0] / pivot : 0.0;
    rhs[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = a.diag[i] - a.sub[i] * c[i - 1];
        if (!(std::isfinite(pivot) && pivot != 0.0)) {
            throw SolverError("tridiagonal solve: zero or non-finite pivot at row " + std::to_string(i));
        }
        c[i] = i + 1 < n ? a.super[i] / pivot : 0.0;
        rhs[i] = (rhs[i] - a.sub[i] * rhs[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

}  // namespace chemosteer
