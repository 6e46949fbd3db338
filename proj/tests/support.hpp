#ifndef UNMIXER_TESTS_SUPPORT_HPP
#define UNMIXER_TESTS_SUPPORT_HPP

#include <cstdint>
#include <random>

#include "unmixer/unmixer.hpp"

namespace support {

using unmixer::Matrix;
using unmixer::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            a(i, j) = d(rng);
        }
    }
    return a;
}

// Default five-species dataset, generated once per test binary.
inline const unmixer::synth::Dataset& default_dataset()
{
    static const unmixer::synth::Dataset d = unmixer::synth::generate(unmixer::synth::default_dataset_config());
    return d;
}

inline const unmixer::PccaContext& default_context()
{
    static const unmixer::PccaContext ctx = unmixer::build_context(default_dataset().m, 5);
    return ctx;
}

// Three-species dataset whose kinetics come from a known row-stochastic matrix.
inline Matrix markov_p_true()
{
    Matrix p(3, 3);
    p << 1.0, 0.0, 0.0,
         0.02, 0.98, 0.0,
         0.0, 0.02, 0.98;
    return p;
}

} // namespace support

#endif
