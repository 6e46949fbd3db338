#ifndef UNMIXER_PCCA_HPP
#define UNMIXER_PCCA_HPP

// Initial transformation matrices for the PCCA+ style basis change
// H = (U A)^T: inner-simplex vertex selection and the feasibility fill.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "unmixer/numerics.hpp"

namespace unmixer::pcca {

struct SimplexInit {
    std::vector<Eigen::Index> vertex_indices;
    Matrix a_init;                 ///< inverse of the vertex rows of u
    double condition = 0.0;        ///< 2-norm condition number of the vertex rows
    double min_entry = 0.0;        ///< smallest entry of (u * a_init)
};

/// Greedy farthest-point choice of r rows of u spanning a maximal simplex.
///
/// The first row maximizes the Euclidean norm; each further row maximizes the
/// distance to the affine hull of the rows already chosen. Ties go to the lower
/// row index.
inline std::vector<Eigen::Index> inner_simplex_indices(const Matrix& u)
{
    linalg::require_finite(u, "inner_simplex_indices");
    const Eigen::Index m = u.rows();
    const Eigen::Index r = u.cols();
    if (m < r) {
        throw DataError("inner_simplex_indices: need at least " + std::to_string(r) + " rows, got "
                        + std::to_string(m));
    }

    std::vector<Eigen::Index> chosen;
    chosen.reserve(static_cast<std::size_t>(r));

    Eigen::Index first = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double norm = u.row(i).norm();
        if (norm > best) {
            best = norm;
            first = i;
        }
    }
    chosen.push_back(first);

    const Vector base = u.row(first).transpose();
    Matrix directions(r, 0);
    for (Eigen::Index k = 1; k < r; ++k) {
        Eigen::Index arg = -1;
        double farthest = -1.0;
        Vector farthest_residual;
        for (Eigen::Index i = 0; i < m; ++i) {
            Vector d = u.row(i).transpose() - base;
            for (int pass = 0; pass < 2; ++pass) {
                d -= directions * (directions.transpose() * d);
            }
            const double dist = d.norm();
            if (dist > farthest) {
                farthest = dist;
                arg = i;
                farthest_residual = std::move(d);
            }
        }
        if (farthest < 1e-12) {
            throw NumericalError("inner_simplex_indices: rows are affinely degenerate; found only "
                                 + std::to_string(k) + " of " + std::to_string(r) + " vertices");
        }
        chosen.push_back(arg);
        directions.conservativeResize(Eigen::NoChange, k);
        directions.col(k - 1) = farthest_residual / farthest;
    }
    return chosen;
}

inline Matrix select_rows(const Matrix& u, const std::vector<Eigen::Index>& idx)
{
    Matrix out(static_cast<Eigen::Index>(idx.size()), u.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= u.rows()) {
            throw DataError("select_rows: row index " + std::to_string(idx[k]) + " out of range [0, "
                            + std::to_string(u.rows()) + ")");
        }
        out.row(static_cast<Eigen::Index>(k)) = u.row(idx[k]);
    }
    return out;
}

/// a_init = inverse of the vertex rows, so that (u * a_init) is the identity on them.
inline SimplexInit initial_transform(const Matrix& u, const std::vector<Eigen::Index>& idx)
{
    if (static_cast<Eigen::Index>(idx.size()) != u.cols()) {
        throw DataError("initial_transform: expected " + std::to_string(u.cols()) + " vertex indices, got "
                        + std::to_string(idx.size()));
    }
    const Matrix vertices = select_rows(u, idx);
    const linalg::SvdResult s = linalg::svd(vertices);
    const double smin = s.sigma(s.sigma.size() - 1);
    if (!(smin > static_cast<double>(u.cols()) * linalg::eps * s.sigma(0))) {
        throw NumericalError("initial_transform: vertex submatrix is singular");
    }

    SimplexInit out;
    out.vertex_indices = idx;
    out.a_init = vertices.partialPivLu().inverse();
    out.condition = s.sigma(0) / smin;
    out.min_entry = (u * out.a_init).minCoeff();
    return out;
}

/// Feasibility fill: rewrites the first row and column of `a` so that u * a is
/// non-negative with unit row sums (every column of the induced H sums to one).
///
/// Requires the first column of u to be constant. Columns 1..r-1 of `a` below
/// the first row are kept; everything else is derived from them.
inline Matrix feasible_transform(const Matrix& u, const Matrix& a)
{
    linalg::require_finite(u, "feasible_transform");
    linalg::require_finite(a, "feasible_transform");
    const Eigen::Index r = u.cols();
    if (a.rows() != r || a.cols() != r) {
        throw DataError("feasible_transform: transform must be " + std::to_string(r) + "x" + std::to_string(r));
    }
    const double c = u(0, 0);
    if (c == 0.0 || (u.col(0).array() - c).abs().maxCoeff() > 1e-10 * std::abs(c)) {
        throw DataError("feasible_transform: first basis column must be constant and nonzero");
    }
    if (r == 1) {
        return Matrix::Constant(1, 1, 1.0 / c);
    }

    // Work in the scaled basis X = u / c whose first column is all ones.
    const Matrix x_tail = u.rightCols(r - 1) / c;
    Matrix ax = c * a;
    ax.block(1, 0, r - 1, 1) = -ax.block(1, 1, r - 1, r - 1).rowwise().sum();
    for (Eigen::Index j = 0; j < r; ++j) {
        ax(0, j) = -(x_tail * ax.block(1, j, r - 1, 1)).minCoeff();
    }
    const double total = ax.row(0).sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw NumericalError("feasible_transform: cannot normalize (first-row sum " + std::to_string(total) + ")");
    }
    return ax / (total * c);
}

} // namespace unmixer::pcca

#endif // UNMIXER_PCCA_HPP
