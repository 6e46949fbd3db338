#ifndef UNMIXER_SYNTH_HPP
#define UNMIXER_SYNTH_HPP

// Synthetic time-resolved spectra: first-order kinetics from a rate matrix,
// Lorentzian component spectra, peak interference and half-normal noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "unmixer/numerics.hpp"
#include "unmixer/preprocess.hpp"
#include "unmixer/spectral_matrix.hpp"

namespace unmixer::synth {

/// First-order reaction scheme: h(t)^T = h0^T expm(K t).
struct ReactionSpec {
    Matrix k;
    Vector h0;
    Vector times;

    void validate() const
    {
        linalg::require_finite(k, "reaction spec: rate matrix");
        const Eigen::Index r = k.rows();
        if (k.cols() != r) {
            throw DataError("reaction spec: rate matrix must be square");
        }
        for (Eigen::Index i = 0; i < r; ++i) {
            if (std::abs(k.row(i).sum()) > 1e-12) {
                throw DataError("reaction spec: rate matrix row " + std::to_string(i) + " does not sum to zero");
            }
            for (Eigen::Index j = 0; j < r; ++j) {
                if (i == j ? k(i, j) > 0.0 : k(i, j) < 0.0) {
                    throw DataError("reaction spec: rate matrix entry (" + std::to_string(i) + ", "
                                    + std::to_string(j) + ") has the wrong sign");
                }
            }
        }
        if (h0.size() != r || !h0.allFinite() || (h0.array() < 0.0).any()
            || std::abs(h0.sum() - 1.0) > 1e-12) {
            throw DataError("reaction spec: h0 must have " + std::to_string(r)
                            + " non-negative entries summing to one");
        }
        if (times.size() < 1 || !times.allFinite()) {
            throw DataError("reaction spec: time grid must be non-empty and finite");
        }
        for (Eigen::Index j = 1; j < times.size(); ++j) {
            if (times(j) < times(j - 1)) {
                throw DataError("reaction spec: time grid must be non-decreasing");
            }
        }
        if (times.size() > 2) {
            const double step = times(1) - times(0);
            for (Eigen::Index j = 2; j < times.size(); ++j) {
                if (std::abs((times(j) - times(j - 1)) - step) > 1e-9 * std::max(1.0, std::abs(times(j)))) {
                    throw DataError("reaction spec: time grid must be equidistant");
                }
            }
        }
    }
};

struct Peak {
    double center = 0.0;
    double amplitude = 1.0;
    double width = 1.0;
};

/// Peaks of each species; the outer index is the species.
using PeakList = std::vector<std::vector<Peak>>;

struct NoiseSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;
};

/// Rate matrix of the five-species scheme A..E; D is the only absorbing species.
inline Matrix five_species_rate_matrix()
{
    Matrix k(5, 5);
    k << -0.53, 0.53, 0.0, 0.0, 0.0,
          0.02, -0.66, 0.43, 0.21, 0.0,
          0.0, 0.25, -0.36, 0.0, 0.11,
          0.0, 0.0, 0.0, 0.0, 0.0,
          0.0, 0.0, 0.1, 0.0, -0.1;
    return k;
}

inline Vector linspace(double start, double stop, Eigen::Index count)
{
    if (count < 1) {
        throw DataError("linspace: count must be positive");
    }
    if (count == 1) {
        return Vector::Constant(1, start);
    }
    Vector v(count);
    const double step = (stop - start) / static_cast<double>(count - 1);
    for (Eigen::Index i = 0; i < count; ++i) {
        v(i) = start + step * static_cast<double>(i);
    }
    v(count - 1) = stop;
    return v;
}

/// r x m concentration matrix; column j is (h0^T expm(K t_j))^T.
inline Matrix kinetics(const ReactionSpec& spec)
{
    spec.validate();
    const Eigen::Index r = spec.k.rows();
    Matrix h(r, spec.times.size());
    for (Eigen::Index j = 0; j < spec.times.size(); ++j) {
        h.col(j) = (spec.h0.transpose() * linalg::expm(spec.k * spec.times(j))).transpose();
    }
    return h;
}

/// r x m concentrations of an autonomous Markov chain: h_j^T = h_{j-1}^T p.
inline Matrix markov_kinetics(const Matrix& p, const Vector& h0, Eigen::Index steps)
{
    linalg::require_finite(p, "markov_kinetics: transition matrix");
    if (p.rows() != p.cols() || h0.size() != p.rows()) {
        throw DataError("markov_kinetics: transition matrix must be square and match h0");
    }
    if (steps < 1) {
        throw DataError("markov_kinetics: need at least one step");
    }
    Matrix h(p.rows(), steps);
    h.col(0) = h0;
    for (Eigen::Index j = 1; j < steps; ++j) {
        h.col(j) = (h.col(j - 1).transpose() * p).transpose();
    }
    return h;
}

/// Least-squares transition matrix of a kinetics matrix: pinv(H^T_-) H^T_+.
inline Matrix estimate_transition(const Matrix& h)
{
    const Matrix ht = h.transpose();
    return linalg::pinv(drop_last_row(ht)) * drop_first_row(ht);
}

inline double lorentzian(double x, const Peak& p) noexcept
{
    const double z = (x - p.center) / p.width;
    return p.amplitude / (1.0 + z * z);
}

/// n x r spectra; column s is the sum of species s's Lorentzians on the grid.
inline Matrix spectra(const PeakList& peaks, const Vector& grid)
{
    if (grid.size() < 1 || !grid.allFinite()) {
        throw DataError("spectra: wavenumber grid must be non-empty and finite");
    }
    for (Eigen::Index i = 1; i < grid.size(); ++i) {
        if (!(grid(i) > grid(i - 1))) {
            throw DataError("spectra: wavenumber grid must be strictly increasing");
        }
    }
    const double lo = grid(0);
    const double hi = grid(grid.size() - 1);
    Matrix w(grid.size(), static_cast<Eigen::Index>(peaks.size()));
    for (std::size_t s = 0; s < peaks.size(); ++s) {
        if (peaks[s].empty()) {
            throw DataError("spectra: species " + std::to_string(s) + " has no peaks");
        }
        for (const Peak& p : peaks[s]) {
            if (!(p.width > 0.0) || !(p.amplitude > 0.0) || !std::isfinite(p.width) || !std::isfinite(p.amplitude)) {
                throw DataError("spectra: species " + std::to_string(s) + " has a peak with non-positive width or amplitude");
            }
            if (!(p.center >= lo && p.center <= hi)) {
                throw DataError("spectra: species " + std::to_string(s) + " peak center "
                                + std::to_string(p.center) + " lies outside the grid");
            }
        }
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            double v = 0.0;
            for (const Peak& p : peaks[s]) {
                v += lorentzian(grid(i), p);
            }
            w(i, static_cast<Eigen::Index>(s)) = v;
        }
    }
    return w;
}

/// Moves every peak center a fraction lambda of the way to its nearest focal
/// point (ties go to the lower focal value).
inline PeakList interfere(const PeakList& peaks, const std::vector<double>& focals, double lambda)
{
    if (focals.empty()) {
        throw DataError("interfere: need at least one focal point");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw DataError("interfere: lambda must lie in [0, 1]");
    }
    std::vector<double> sorted = focals;
    std::sort(sorted.begin(), sorted.end());
    PeakList out = peaks;
    for (auto& species : out) {
        for (Peak& p : species) {
            double nearest = sorted.front();
            for (double f : sorted) {
                if (std::abs(f - p.center) < std::abs(nearest - p.center)) {
                    nearest = f;
                }
            }
            p.center = (1.0 - lambda) * p.center + lambda * nearest;
        }
    }
    return out;
}

/// M = W H.
inline SpectralMatrix compose(const Matrix& w, const Matrix& h)
{
    if (w.cols() != h.rows()) {
        throw DataError("compose: inner dimensions differ (" + std::to_string(w.cols()) + " vs "
                        + std::to_string(h.rows()) + ")");
    }
    return SpectralMatrix(w * h);
}

/// M + delta * |N| with N standard normal from a seeded generator.
inline SpectralMatrix add_noise(const SpectralMatrix& m, const NoiseSpec& noise)
{
    if (!(noise.delta >= 0.0) || !std::isfinite(noise.delta)) {
        throw DataError("add_noise: delta must be finite and non-negative");
    }
    if (noise.delta == 0.0) {
        return m;
    }
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out = m.values();
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            out(i, j) += noise.delta * std::abs(normal(rng));
        }
    }
    return SpectralMatrix(std::move(out));
}

/// Ranges for seeded random peak lists.
struct PeakGeneration {
    int min_peaks = 3;
    int max_peaks = 6;
    double center_lo = 150.0;
    double center_hi = 1750.0;
    double amplitude_lo = 2.0;
    double amplitude_hi = 10.0;
    double width_lo = 8.0;
    double width_hi = 30.0;
};

inline PeakList random_peaks(std::size_t species, const PeakGeneration& gen, std::uint64_t seed)
{
    if (gen.min_peaks < 1 || gen.max_peaks < gen.min_peaks) {
        throw DataError("random_peaks: need 1 <= min_peaks <= max_peaks");
    }
    if (!(gen.center_lo <= gen.center_hi) || !(gen.amplitude_lo > 0.0 && gen.amplitude_lo <= gen.amplitude_hi)
        || !(gen.width_lo > 0.0 && gen.width_lo <= gen.width_hi)) {
        throw DataError("random_peaks: invalid parameter ranges");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(gen.min_peaks, gen.max_peaks);
    std::uniform_real_distribution<double> center(gen.center_lo, gen.center_hi);
    std::uniform_real_distribution<double> amplitude(gen.amplitude_lo, gen.amplitude_hi);
    std::uniform_real_distribution<double> width(gen.width_lo, gen.width_hi);
    PeakList out(species);
    for (auto& list : out) {
        const int k = count(rng);
        for (int i = 0; i < k; ++i) {
            Peak p;
            p.center = center(rng);
            p.amplitude = amplitude(rng);
            p.width = width(rng);
            list.push_back(p);
        }
    }
    return out;
}

} // namespace unmixer::synth

#endif // UNMIXER_SYNTH_HPP
