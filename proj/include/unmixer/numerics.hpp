#ifndef UNMIXER_NUMERICS_HPP
#define UNMIXER_NUMERICS_HPP

// Dense linear-algebra kernel: thin SVD, Moore-Penrose pseudoinverse, matrix
// exponential, Gram-Schmidt orthonormalization and Pearson correlation.
//
// Storage and BLAS-level products come from Eigen; the decompositions built on
// top of it are implemented here so their failure modes are explicit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "unmixer/error.hpp"

namespace unmixer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline constexpr double eps = std::numeric_limits<double>::epsilon();

inline bool all_finite(const Matrix& a) noexcept
{
    return a.allFinite();
}

/// Throws DataError unless `a` is non-empty and every entry is finite.
inline void require_finite(const Matrix& a, const std::string& what)
{
    if (a.rows() < 1 || a.cols() < 1) {
        throw DataError(what + ": matrix must have at least one row and one column");
    }
    if (!a.allFinite()) {
        throw DataError(what + ": matrix contains NaN or infinite entries");
    }
}

/// ||a - b||_F / ||b||_F, or ||a - b||_F when b is zero.
inline double relative_error(const Matrix& a, const Matrix& b)
{
    const double denom = b.norm();
    const double diff = (a - b).norm();
    return denom > 0.0 ? diff / denom : diff;
}

struct SvdResult {
    Matrix u;           ///< rows x k, orthonormal columns
    Vector sigma;       ///< k singular values, non-increasing
    Matrix vt;          ///< k x cols, orthonormal rows
    std::size_t sweeps = 0;
};

namespace detail {

    // One-sided (Hestenes) Jacobi on a square matrix. On return the columns of
    // `w` are mutually orthogonal and `v` accumulates the rotations, so that
    // input = w * v^T.
    inline std::size_t hestenes_jacobi(Matrix& w, Matrix& v, std::size_t max_sweeps)
    {
        const Eigen::Index n = w.cols();
        v.setIdentity(n, n);
        // Columns at rounding level of the whole matrix carry no information;
        // rotating them against each other never settles.
        const double negligible = eps * w.norm();
        for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
            bool rotated = false;
            for (Eigen::Index i = 0; i + 1 < n; ++i) {
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    const double alpha = w.col(i).squaredNorm();
                    const double beta = w.col(j).squaredNorm();
                    const double gamma = w.col(i).dot(w.col(j));
                    if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha) * std::sqrt(beta)
                        || std::sqrt(alpha) <= negligible || std::sqrt(beta) <= negligible) {
                        continue;
                    }
                    rotated = true;
                    const double zeta = (beta - alpha) / (2.0 * gamma);
                    double t;
                    if (std::abs(zeta) > 1e150) {
                        t = 0.5 / zeta;
                    } else {
                        t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                    }
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = c * t;
                    for (Eigen::Index k = 0; k < w.rows(); ++k) {
                        const double wi = w(k, i);
                        const double wj = w(k, j);
                        w(k, i) = c * wi - s * wj;
                        w(k, j) = s * wi + c * wj;
                    }
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double vi = v(k, i);
                        const double vj = v(k, j);
                        v(k, i) = c * vi - s * vj;
                        v(k, j) = s * vi + c * vj;
                    }
                }
            }
            if (!rotated) {
                return sweep;
            }
        }
        throw NumericalError("svd: one-sided Jacobi did not converge after "
                                 + std::to_string(max_sweeps) + " sweeps",
                             max_sweeps);
    }

    // Fills columns of `u` flagged in `missing` with unit vectors orthogonal to
    // every other column.
    inline void complete_basis(Matrix& u, const std::vector<bool>& missing)
    {
        const Eigen::Index rows = u.rows();
        Eigen::Index candidate = 0;
        for (Eigen::Index col = 0; col < u.cols(); ++col) {
            if (!missing[static_cast<std::size_t>(col)]) {
                continue;
            }
            for (; candidate < rows; ++candidate) {
                Vector e = Vector::Unit(rows, candidate);
                for (int pass = 0; pass < 2; ++pass) {
                    for (Eigen::Index k = 0; k < u.cols(); ++k) {
                        if (k == col || (missing[static_cast<std::size_t>(k)] && k > col)) {
                            continue;
                        }
                        e -= u.col(k).dot(e) * u.col(k);
                    }
                }
                const double norm = e.norm();
                if (norm > 0.5) {
                    u.col(col) = e / norm;
                    ++candidate;
                    break;
                }
            }
        }
    }

    inline SvdResult svd_tall(const Matrix& a, std::size_t max_sweeps)
    {
        const Eigen::Index p = a.rows();
        const Eigen::Index q = a.cols();

        Eigen::HouseholderQR<Matrix> qr(a);
        Matrix w = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
        const Matrix q_thin = qr.householderQ() * Matrix::Identity(p, q);

        Matrix v;
        const std::size_t sweeps = hestenes_jacobi(w, v, max_sweeps);

        std::vector<double> norms(static_cast<std::size_t>(q));
        for (Eigen::Index k = 0; k < q; ++k) {
            norms[static_cast<std::size_t>(k)] = w.col(k).norm();
        }
        std::vector<Eigen::Index> order(static_cast<std::size_t>(q));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
            return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
        });

        SvdResult out;
        out.sweeps = sweeps;
        out.sigma.resize(q);
        Matrix ur(q, q);
        Matrix vs(q, q);
        std::vector<bool> missing(static_cast<std::size_t>(q), false);
        for (Eigen::Index k = 0; k < q; ++k) {
            const Eigen::Index src = order[static_cast<std::size_t>(k)];
            const double s = norms[static_cast<std::size_t>(src)];
            out.sigma(k) = s;
            vs.col(k) = v.col(src);
            if (s > 0.0 && std::isfinite(1.0 / s)) {
                ur.col(k) = w.col(src) / s;
            } else {
                out.sigma(k) = 0.0;
                ur.col(k).setZero();
                missing[static_cast<std::size_t>(k)] = true;
            }
        }
        if (std::find(missing.begin(), missing.end(), true) != missing.end()) {
            complete_basis(ur, missing);
        }
        out.u = q_thin * ur;
        out.vt = vs.transpose();
        return out;
    }

} // namespace detail

/// Thin SVD a = u * diag(sigma) * vt with k = min(rows, cols).
///
/// Tall inputs are QR-reduced first and the triangular factor is diagonalised
/// by one-sided Jacobi sweeps; wide inputs are handled through the transpose.
/// Each left singular vector is signed so that its largest-magnitude entry is
/// non-negative, which makes results reproducible across platforms.
inline SvdResult svd(const Matrix& a, std::size_t max_sweeps = 60)
{
    require_finite(a, "svd");
    SvdResult out;
    if (a.rows() >= a.cols()) {
        out = detail::svd_tall(a, max_sweeps);
    } else {
        SvdResult t = detail::svd_tall(a.transpose(), max_sweeps);
        out.u = t.vt.transpose();
        out.sigma = std::move(t.sigma);
        out.vt = t.u.transpose();
        out.sweeps = t.sweeps;
    }
    for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
        Eigen::Index arg = 0;
        out.u.col(k).cwiseAbs().maxCoeff(&arg);
        if (out.u(arg, k) < 0.0) {
            out.u.col(k) *= -1.0;
            out.vt.row(k) *= -1.0;
        }
    }
    return out;
}

/// Relative truncation tolerance used by pinv when none is given.
inline double default_pinv_tolerance(const Matrix& a) noexcept
{
    return static_cast<double>(std::max(a.rows(), a.cols())) * eps;
}

/// Numerical rank: number of singular values above tol * sigma_max.
inline Eigen::Index numerical_rank(const Vector& sigma, double tol)
{
    if (sigma.size() == 0 || sigma(0) <= 0.0) {
        return 0;
    }
    const double cutoff = tol * sigma(0);
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
        if (sigma(k) > cutoff) {
            ++rank;
        }
    }
    return rank;
}

/// Moore-Penrose pseudoinverse. Singular values <= tol * sigma_max are treated as zero.
inline Matrix pinv(const Matrix& a, double tol)
{
    if (!(tol >= 0.0) || !std::isfinite(tol)) {
        throw ConfigError("pinv: tolerance must be finite and non-negative");
    }
    const SvdResult s = svd(a);
    Matrix out = Matrix::Zero(a.cols(), a.rows());
    if (s.sigma.size() == 0 || s.sigma(0) <= 0.0) {
        return out;
    }
    const double cutoff = tol * s.sigma(0);
    for (Eigen::Index k = 0; k < s.sigma.size(); ++k) {
        if (s.sigma(k) > cutoff) {
            out.noalias() += (s.vt.row(k).transpose() / s.sigma(k)) * s.u.col(k).transpose();
        }
    }
    return out;
}

inline Matrix pinv(const Matrix& a)
{
    require_finite(a, "pinv");
    return pinv(a, default_pinv_tolerance(a));
}

/// Matrix exponential by scaling and squaring with a degree-10 Taylor polynomial.
///
/// The argument is scaled by 2^-s until its 1-norm is at most 1/8, where the
/// truncation error of the polynomial is below 3e-18.
inline Matrix expm(const Matrix& a)
{
    require_finite(a, "expm");
    if (a.rows() != a.cols()) {
        throw DataError("expm: matrix must be square, got " + std::to_string(a.rows()) + "x"
                        + std::to_string(a.cols()));
    }
    const Eigen::Index n = a.rows();
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.125) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.125)));
    }
    if (squarings > 1000) {
        throw NumericalError("expm: argument norm " + std::to_string(norm) + " overflows");
    }
    const Matrix b = a * std::ldexp(1.0, -squarings);
    const Matrix identity = Matrix::Identity(n, n);

    Matrix e = identity;
    for (int k = 10; k >= 1; --k) {
        e = identity + (b * e) / static_cast<double>(k);
    }
    for (int k = 0; k < squarings; ++k) {
        e = (e * e).eval();
    }
    if (!e.allFinite()) {
        throw NumericalError("expm: result overflowed (argument 1-norm " + std::to_string(norm) + ")");
    }
    return e;
}

/// Modified Gram-Schmidt with one re-orthogonalization pass, left to right, so
/// the direction of the first column is kept. A column whose residual falls
/// below 1e-12 of its original norm is reported as rank deficient.
inline Matrix orthonormalize(const Matrix& u)
{
    require_finite(u, "orthonormalize");
    if (u.cols() > u.rows()) {
        throw NumericalError("orthonormalize: " + std::to_string(u.cols()) + " columns cannot be orthonormal in R^"
                             + std::to_string(u.rows()));
    }
    Matrix q(u.rows(), u.cols());
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        Vector v = u.col(j);
        const double original = v.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                v -= q.col(i).dot(v) * q.col(i);
            }
        }
        const double norm = v.norm();
        if (original == 0.0 || norm < 1e-12 * original) {
            throw NumericalError("orthonormalize: column " + std::to_string(j)
                                 + " is linearly dependent on the preceding columns");
        }
        q.col(j) = v / norm;
    }
    return q;
}

/// Pearson correlation coefficient, clamped to [-1, 1].
inline double pearson(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y)
{
    if (x.size() != y.size()) {
        throw DataError("pearson: length mismatch (" + std::to_string(x.size()) + " vs "
                        + std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw DataError("pearson: need at least two samples");
    }
    const double n = static_cast<double>(x.size());
    const Vector xc = x.array() - x.sum() / n;
    const Vector yc = y.array() - y.sum() / n;
    const double sxx = xc.squaredNorm();
    const double syy = yc.squaredNorm();
    // Variance indistinguishable from rounding of the mean counts as zero.
    const double xs = 8.0 * eps * x.cwiseAbs().maxCoeff();
    const double ys = 8.0 * eps * y.cwiseAbs().maxCoeff();
    if (sxx <= n * xs * xs || syy <= n * ys * ys) {
        throw NumericalError("pearson: zero variance");
    }
    const double r = xc.dot(yc) / (std::sqrt(sxx) * std::sqrt(syy));
    return std::clamp(r, -1.0, 1.0);
}

} // namespace linalg
} // namespace unmixer

#endif // UNMIXER_NUMERICS_HPP
