#ifndef CONFORMQ_LINALG_HPP
#define CONFORMQ_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <conformq/errors.hpp>
#include <conformq/jet.hpp>
#include <conformq/scalar.hpp>

namespace conformq
{

// Dense row-major matrix of jets.
template <typename S>
struct JetMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<Jet<S>> data;

    JetMatrix(std::size_t r, std::size_t c, const Jet<S> &fill) : rows(r), cols(c), data(r * c, fill) {}

    Jet<S> &operator()(std::size_t i, std::size_t j)
    {
        return data[i * cols + j];
    }
    const Jet<S> &operator()(std::size_t i, std::size_t j) const
    {
        return data[i * cols + j];
    }
};

// Solves A X = B over the truncated jet algebra by Gaussian elimination, pivoting on
// entries whose constant term is largest in magnitude (nonzero suffices in rational
// mode). A must be square with an invertible value matrix.
template <typename S>
JetMatrix<S> jet_solve(JetMatrix<S> a, JetMatrix<S> b)
{
    using traits = scalar_traits<S>;
    if (a.rows != a.cols || b.rows != a.rows) {
        throw dimension_error("jet_solve: shape mismatch");
    }
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = n;
        double best = 0;
        for (std::size_t r = col; r < n; ++r) {
            const double v = std::fabs(traits::to_double(a(r, col).value()));
            if (!traits::is_zero(a(r, col).value()) && (piv == n || v > best)) {
                piv = r;
                best = v;
                if (traits::exact) {
                    break;
                }
            }
        }
        if (piv == n || (!traits::exact && best < 1e-300)) {
            throw domain_error("jet_solve: singular value matrix");
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
            }
            for (std::size_t j = 0; j < b.cols; ++j) {
                std::swap(b(piv, j), b(col, j));
            }
        }
        const Jet<S> inv = jet_inverse(a(col, col));
        for (std::size_t j = col; j < n; ++j) {
            a(col, j) = a(col, j) * inv;
        }
        for (std::size_t j = 0; j < b.cols; ++j) {
            b(col, j) = b(col, j) * inv;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a(r, col).is_zero()) {
                continue;
            }
            const Jet<S> f = a(r, col);
            for (std::size_t j = col; j < n; ++j) {
                a(r, j) -= f * a(col, j);
            }
            for (std::size_t j = 0; j < b.cols; ++j) {
                b(r, j) -= f * b(col, j);
            }
        }
    }
    return b;
}

template <typename S>
JetMatrix<S> jet_matrix_inverse(const JetMatrix<S> &a)
{
    const int dim = a.data.front().dim();
    int order = a.data.front().order();
    for (const auto &x : a.data) {
        order = std::min(order, x.order());
    }
    JetMatrix<S> id(a.rows, a.rows, Jet<S>(dim, order));
    for (std::size_t i = 0; i < a.rows; ++i) {
        id(i, i) = Jet<S>::constant(dim, order, S(1));
    }
    return jet_solve(a, id);
}

// Determinant by elimination, pivoting on entries with a nonzero constant term.
template <typename S>
Jet<S> jet_determinant(JetMatrix<S> a)
{
    using traits = scalar_traits<S>;
    if (a.rows != a.cols || a.rows == 0) {
        throw dimension_error("jet_determinant: matrix must be square and nonempty");
    }
    const std::size_t n = a.rows;
    Jet<S> det = Jet<S>::constant(a(0, 0).dim(), a(0, 0).order(), S(1));
    for (const auto &x : a.data) {
        det = det.truncate(std::min(det.order(), x.order()));
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = n;
        double best = 0;
        for (std::size_t r = col; r < n; ++r) {
            const double v = std::fabs(traits::to_double(a(r, col).value()));
            if (!traits::is_zero(a(r, col).value()) && (piv == n || v > best)) {
                piv = r;
                best = v;
            }
        }
        if (piv == n) {
            throw domain_error("jet_determinant: singular value matrix");
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
            }
            det = -det;
        }
        det = det * a(col, col);
        const Jet<S> inv = jet_inverse(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            if (a(r, col).is_zero()) {
                continue;
            }
            const Jet<S> f = a(r, col) * inv;
            for (std::size_t j = col; j < n; ++j) {
                a(r, j) -= f * a(col, j);
            }
        }
    }
    return det;
}

// Number of positive and negative eigenvalues of a symmetric matrix, by symmetric
// elimination (Sylvester's law of inertia). Returns {p, q}; p + q < n means singular.
template <typename S>
std::pair<int, int> inertia(std::vector<std::vector<S>> a)
{
    using traits = scalar_traits<S>;
    const double tol = traits::exact ? 0.0 : 1e-12;
    auto nz = [&](const S &x) { return traits::exact ? !traits::is_zero(x) : std::fabs(traits::to_double(x)) > tol; };
    const std::size_t n = a.size();
    int p = 0, q = 0;
    std::vector<bool> done(n, false);
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t piv = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (!done[i] && nz(a[i][i])) {
                piv = i;
                break;
            }
        }
        if (piv == n) {
            // all remaining diagonal entries vanish: fold a nonzero off-diagonal entry
            // onto the diagonal by the congruence e_i -> e_i + e_j
            std::size_t pi = n, pj = n;
            for (std::size_t i = 0; i < n && pi == n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (!done[i] && !done[j] && i != j && nz(a[i][j])) {
                        pi = i;
                        pj = j;
                        break;
                    }
                }
            }
            if (pi == n) {
                break;
            }
            for (std::size_t k = 0; k < n; ++k) {
                a[pi][k] += a[pj][k];
            }
            for (std::size_t k = 0; k < n; ++k) {
                a[k][pi] += a[k][pj];
            }
            piv = pi;
        }
        const S d = a[piv][piv];
        (traits::sign(d) > 0 ? p : q) += 1;
        done[piv] = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i] || !nz(a[i][piv])) {
                continue;
            }
            const S f = a[i][piv] / d;
            for (std::size_t j = 0; j < n; ++j) {
                a[i][j] -= f * a[piv][j];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!done[j]) {
                a[piv][j] = S(0);
                a[j][piv] = S(0);
            }
        }
    }
    return {p, q};
}

} // namespace conformq

#endif
