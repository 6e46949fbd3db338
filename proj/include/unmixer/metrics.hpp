#ifndef UNMIXER_METRICS_HPP
#define UNMIXER_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "unmixer/numerics.hpp"
#include "unmixer/pipeline.hpp"

namespace unmixer::metrics {

/// Pearson correlations between the columns of a (rows) and b (columns).
/// Pairs involving a zero-variance column get -1 and raise `degenerate`.
struct CorrelationMatrix {
    Matrix values;
    bool degenerate = false;
};

inline CorrelationMatrix column_correlations(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DataError("column_correlations: shape mismatch (" + std::to_string(a.rows()) + "x"
                        + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x"
                        + std::to_string(b.cols()) + ")");
    }
    CorrelationMatrix out{Matrix(a.cols(), b.cols()), false};
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            try {
                out.values(i, j) = linalg::pearson(a.col(i), b.col(j));
            } catch (const NumericalError&) {
                out.values(i, j) = -1.0;
                out.degenerate = true;
            }
        }
    }
    return out;
}

/// Bijection maximizing sum_i score(i, perm[i]), by dynamic programming over
/// subsets of columns. Exact; limited to 12 x 12.
inline std::vector<int> optimal_assignment(const Matrix& score)
{
    const int r = static_cast<int>(score.rows());
    if (score.cols() != r) {
        throw DataError("optimal_assignment: score matrix must be square");
    }
    if (r > 12) {
        throw DataError("optimal_assignment: at most 12 components supported, got " + std::to_string(r));
    }
    if (r == 0) {
        return {};
    }
    const std::size_t full = std::size_t{1} << r;
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    // best[mask]: best total for assigning rows 0..popcount(mask)-1 to the columns in mask.
    std::vector<double> best(full, neg_inf);
    std::vector<int> choice(full, -1);
    best[0] = 0.0;
    for (std::size_t mask = 0; mask < full; ++mask) {
        if (best[mask] == neg_inf) {
            continue;
        }
        const int row = __builtin_popcountll(mask);
        if (row >= r) {
            continue;
        }
        for (int col = 0; col < r; ++col) {
            const std::size_t bit = std::size_t{1} << col;
            if (mask & bit) {
                continue;
            }
            const double v = best[mask] + score(row, col);
            if (v > best[mask | bit]) {
                best[mask | bit] = v;
                choice[mask | bit] = col;
            }
        }
    }
    std::vector<int> perm(static_cast<std::size_t>(r));
    std::size_t mask = full - 1;
    for (int row = r - 1; row >= 0; --row) {
        const int col = choice[mask];
        perm[static_cast<std::size_t>(row)] = col;
        mask &= ~(std::size_t{1} << col);
    }
    return perm;
}

struct ComponentMatch {
    std::vector<int> permutation;      ///< recovered index -> true index
    std::vector<double> correlations;  ///< per recovered component, with its match
    bool degenerate = false;
};

/// Pairs recovered spectra with true spectra by maximal total correlation.
inline ComponentMatch match_components(const Matrix& w_rec, const Matrix& w_true)
{
    const CorrelationMatrix c = column_correlations(w_rec, w_true);
    ComponentMatch out;
    out.permutation = optimal_assignment(c.values);
    out.degenerate = c.degenerate;
    for (std::size_t i = 0; i < out.permutation.size(); ++i) {
        out.correlations.push_back(c.values(static_cast<Eigen::Index>(i), out.permutation[i]));
    }
    return out;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y)
{
    auto ranks = [](const Eigen::Ref<const Vector>& v) {
        const Eigen::Index n = v.size();
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
        Vector r(n);
        for (Eigen::Index i = 0; i < n;) {
            Eigen::Index j = i;
            while (j + 1 < n && v(idx[static_cast<std::size_t>(j + 1)]) == v(idx[static_cast<std::size_t>(i)])) {
                ++j;
            }
            const double avg = 0.5 * static_cast<double>(i + j);
            for (Eigen::Index k = i; k <= j; ++k) {
                r(idx[static_cast<std::size_t>(k)]) = avg;
            }
            i = j + 1;
        }
        return r;
    };
    if (x.size() != y.size()) {
        throw DataError("spearman: length mismatch");
    }
    return linalg::pearson(ranks(x), ranks(y));
}

struct TruthFactors {
    Matrix w;
    Matrix h;
    std::optional<Matrix> p;
};

struct MinEntries {
    double w = 0.0;
    double h = 0.0;
    double p = 0.0;
};

struct MatchReport {
    std::optional<std::vector<int>> permutation;
    std::optional<std::vector<double>> correlations;
    std::optional<std::vector<double>> kinetics_rmse;
    std::optional<double> p_max_error;   ///< max |P_rec aligned - P_true| when P_true is given
    bool degenerate_columns = false;
    double residual = 0.0;
    double h_colsum_dev = 0.0;
    MinEntries min_entries;
    double p_rowsum_dev = 0.0;
};

inline double max_colsum_deviation(const Matrix& h)
{
    return (h.colwise().sum().array() - 1.0).abs().maxCoeff();
}

inline double max_rowsum_deviation(const Matrix& p)
{
    return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

/// Relabels a recovered transition matrix into the true species order:
/// aligned(perm[i], perm[j]) = p_rec(i, j).
inline Matrix align_transition(const Matrix& p_rec, const std::vector<int>& perm)
{
    Matrix out(p_rec.rows(), p_rec.cols());
    for (Eigen::Index i = 0; i < p_rec.rows(); ++i) {
        for (Eigen::Index j = 0; j < p_rec.cols(); ++j) {
            out(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = p_rec(i, j);
        }
    }
    return out;
}

/// Feasibility diagnostics, plus ground-truth comparison when truth is given.
/// Kinetics are compared under the spectral permutation.
inline MatchReport report(const Matrix& w_rec, const Matrix& h_rec, const Matrix& p_rec, double residual,
                          const std::optional<TruthFactors>& truth = std::nullopt)
{
    if (h_rec.rows() != w_rec.cols() || p_rec.rows() != w_rec.cols() || p_rec.cols() != w_rec.cols()) {
        throw DataError("report: recovered factors have inconsistent ranks");
    }
    MatchReport out;
    out.residual = residual;
    out.h_colsum_dev = max_colsum_deviation(h_rec);
    out.p_rowsum_dev = max_rowsum_deviation(p_rec);
    out.min_entries = {w_rec.minCoeff(), h_rec.minCoeff(), p_rec.minCoeff()};
    if (!truth) {
        return out;
    }
    if (truth->h.rows() != h_rec.rows() || truth->h.cols() != h_rec.cols()) {
        throw DataError("report: kinetics shape mismatch (" + std::to_string(h_rec.rows()) + "x"
                        + std::to_string(h_rec.cols()) + " vs " + std::to_string(truth->h.rows()) + "x"
                        + std::to_string(truth->h.cols()) + ")");
    }
    const ComponentMatch match = match_components(w_rec, truth->w);
    std::vector<double> rmse;
    for (std::size_t i = 0; i < match.permutation.size(); ++i) {
        const Vector diff = h_rec.row(static_cast<Eigen::Index>(i)) - truth->h.row(match.permutation[i]);
        rmse.push_back(std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size())));
    }
    if (truth->p) {
        if (truth->p->rows() != p_rec.rows() || truth->p->cols() != p_rec.cols()) {
            throw DataError("report: transition matrix shape mismatch");
        }
        out.p_max_error = (align_transition(p_rec, match.permutation) - *truth->p).cwiseAbs().maxCoeff();
    }
    out.permutation = match.permutation;
    out.correlations = match.correlations;
    out.kinetics_rmse = std::move(rmse);
    out.degenerate_columns = match.degenerate;
    return out;
}

inline MatchReport report(const Factorization& fact, const std::optional<TruthFactors>& truth = std::nullopt)
{
    return report(fact.w_rec, fact.h_rec, fact.p_rec, fact.residual, truth);
}

} // namespace unmixer::metrics

#endif // UNMIXER_METRICS_HPP
