#ifndef UNMIXER_SPECTRAL_MATRIX_HPP
#define UNMIXER_SPECTRAL_MATRIX_HPP

#include <cmath>
#include <string>
#include <utility>

#include "unmixer/numerics.hpp"

namespace unmixer {

/// Measurement matrix: one row per wavenumber bin, one column per timestep.
///
/// Entries must be finite and non-negative. Negative values down to
/// -1e-12 * max|entry| are accepted as rounding residue of exact products.
class SpectralMatrix {
public:
    explicit SpectralMatrix(Matrix values) : values_(std::move(values))
    {
        linalg::require_finite(values_, "spectral matrix");
        const double scale = values_.cwiseAbs().maxCoeff();
        const double floor = -1e-12 * scale;
        for (Eigen::Index j = 0; j < values_.cols(); ++j) {
            for (Eigen::Index i = 0; i < values_.rows(); ++i) {
                if (values_(i, j) < floor) {
                    throw DataError("spectral matrix: negative intensity " + std::to_string(values_(i, j))
                                    + " at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
                }
            }
        }
    }

    const Matrix& values() const noexcept { return values_; }

    /// Number of wavenumber bins (n).
    Eigen::Index wavenumbers() const noexcept { return values_.rows(); }

    /// Number of timesteps (m).
    Eigen::Index timesteps() const noexcept { return values_.cols(); }

private:
    Matrix values_;
};

} // namespace unmixer

#endif // UNMIXER_SPECTRAL_MATRIX_HPP
