#ifndef UNMIXER_PREPROCESS_HPP
#define UNMIXER_PREPROCESS_HPP

#include <string>

#include "unmixer/numerics.hpp"
#include "unmixer/spectral_matrix.hpp"

namespace unmixer {

/// Removes the first row (the "plus" shift of a time-indexed matrix).
inline Matrix drop_first_row(const Matrix& a)
{
    if (a.rows() < 2) {
        throw DataError("drop_first_row: need at least two rows, got " + std::to_string(a.rows()));
    }
    return a.bottomRows(a.rows() - 1);
}

/// Removes the last row (the "minus" shift of a time-indexed matrix).
inline Matrix drop_last_row(const Matrix& a)
{
    if (a.rows() < 2) {
        throw DataError("drop_last_row: need at least two rows, got " + std::to_string(a.rows()));
    }
    return a.topRows(a.rows() - 1);
}

/// Everything the objective needs from the data, computed once.
///
/// `u` is the m x r basis whose first column is the normalized constant vector
/// and whose remaining columns span the leading singular directions of the
/// time-centered data. `s` is the one-step shift operator pinv(u_-) * u_+.
struct PccaContext {
    SpectralMatrix data;
    Matrix u;
    Matrix s;
    Matrix data_times_u;        ///< M * u, cached for the spectra estimate
    Vector singular_values;     ///< of the centered M^T
    Eigen::Index numerical_rank = 0;

    Eigen::Index rank() const noexcept { return u.cols(); }
};

/// Builds the basis and shift operator for factorization rank r.
///
/// Each wavenumber's time series is centered on its mean before the SVD of
/// M^T. Fails with a DataError naming the achievable rank when r - 1 exceeds
/// the numerical rank of the centered data.
inline PccaContext build_context(const SpectralMatrix& m, Eigen::Index r)
{
    const Matrix& values = m.values();
    const Eigen::Index n = m.wavenumbers();
    const Eigen::Index steps = m.timesteps();
    if (r < 1) {
        throw ConfigError("build_context: rank must be at least 1, got " + std::to_string(r));
    }
    if (n < r) {
        throw DataError("build_context: rank " + std::to_string(r) + " exceeds the number of wavenumbers ("
                        + std::to_string(n) + ")");
    }
    if (steps < r + 1) {
        throw DataError("build_context: rank " + std::to_string(r) + " needs at least " + std::to_string(r + 1)
                        + " timesteps, got " + std::to_string(steps));
    }

    Matrix centered = values.transpose();
    centered.rowwise() -= centered.colwise().mean();
    const linalg::SvdResult svd = linalg::svd(centered);

    const double cutoff = static_cast<double>(std::max(n, steps)) * linalg::eps * values.norm();
    Eigen::Index numerical_rank = 0;
    for (Eigen::Index k = 0; k < svd.sigma.size(); ++k) {
        if (svd.sigma(k) > cutoff) {
            ++numerical_rank;
        }
    }
    if (r - 1 > numerical_rank) {
        throw DataError("build_context: requested rank " + std::to_string(r) + " exceeds achievable rank "
                        + std::to_string(numerical_rank + 1) + " (centered data has numerical rank "
                        + std::to_string(numerical_rank) + ")");
    }

    Matrix basis(steps, r);
    basis.col(0).setOnes();
    if (r > 1) {
        basis.rightCols(r - 1) = svd.u.leftCols(r - 1);
    }
    Matrix u = linalg::orthonormalize(basis);
    Matrix s = linalg::pinv(drop_last_row(u)) * drop_first_row(u);
    Matrix mu = values * u;

    return PccaContext{m, std::move(u), std::move(s), std::move(mu), svd.sigma, numerical_rank};
}

} // namespace unmixer

#endif // UNMIXER_PREPROCESS_HPP
