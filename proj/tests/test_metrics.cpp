#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace unmixer;
using namespace unmixer::metrics;
using support::random_matrix;

namespace {

std::vector<int> exhaustive_assignment(const Matrix& score)
{
    std::vector<int> perm(static_cast<std::size_t>(score.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_total = -std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            total += score(static_cast<Eigen::Index>(i), perm[i]);
        }
        if (total > best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double total(const Matrix& score, const std::vector<int>& perm)
{
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        s += score(static_cast<Eigen::Index>(i), perm[i]);
    }
    return s;
}

Matrix paper_p_rec()
{
    Matrix p(3, 3);
    p << 1.00, 0.0, 0.0,
         0.02, 0.98, 0.0,
         -0.01, 0.02, 0.99;
    return p;
}

} // namespace

TEST(Match, IdentityAndSwap)
{
    const Matrix w = random_matrix(50, 4, 1, 0.0, 1.0);
    const ComponentMatch self = match_components(w, w);
    EXPECT_EQ(self.permutation, (std::vector<int>{0, 1, 2, 3}));
    for (double c : self.correlations) {
        EXPECT_DOUBLE_EQ(c, 1.0);
    }
    Matrix swapped = w;
    swapped.col(0).swap(swapped.col(1));
    EXPECT_EQ(match_components(swapped, w).permutation, (std::vector<int>{1, 0, 2, 3}));
}

TEST(Match, PerturbedSpectraAgreeWithExhaustiveSearch)
{
    const Matrix w = random_matrix(80, 5, 2, 0.0, 1.0);
    const Matrix noisy = w + 0.05 * random_matrix(80, 5, 3);
    const Matrix score = column_correlations(noisy, w).values;
    EXPECT_EQ(match_components(noisy, w).permutation, exhaustive_assignment(score));
}

TEST(Match, AssignmentOptimalUpToSeven)
{
    for (int r = 1; r <= 7; ++r) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Matrix score = random_matrix(r, r, 100 * static_cast<std::uint64_t>(r) + seed);
            const auto dp = optimal_assignment(score);
            const auto brute = exhaustive_assignment(score);
            EXPECT_DOUBLE_EQ(total(score, dp), total(score, brute)) << "r " << r << " seed " << seed;
            std::vector<int> sorted = dp;
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < r; ++i) {
                EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
            }
        }
    }
}

TEST(Match, GreedyCanBeBeatenByOptimalAssignment)
{
    Matrix score(2, 2);
    score << 0.9, 0.8,
             0.85, 0.1;
    // greedy takes (0, 0) first and is left with 0.1; the optimum is 0.8 + 0.85
    EXPECT_EQ(optimal_assignment(score), (std::vector<int>{1, 0}));
}

TEST(Match, LimitsAndDegenerateColumns)
{
    EXPECT_THROW(optimal_assignment(Matrix::Zero(13, 13)), DataError);
    EXPECT_THROW(optimal_assignment(Matrix::Zero(2, 3)), DataError);
    Matrix w = random_matrix(30, 2, 4, 0.0, 1.0);
    Matrix flat = w;
    flat.col(1).setConstant(0.3);
    const ComponentMatch m = match_components(flat, w);
    EXPECT_TRUE(m.degenerate);
    EXPECT_DOUBLE_EQ(m.correlations[1], -1.0);
    EXPECT_THROW(match_components(w, random_matrix(29, 2, 5)), DataError);
}

TEST(Spearman, MonotoneAndTies)
{
    Vector x = Vector::LinSpaced(10, 0.0, 9.0);
    EXPECT_DOUBLE_EQ(spearman(x, x.array().exp().matrix()), 1.0);
    EXPECT_DOUBLE_EQ(spearman(x, -x.array().cube().matrix()), -1.0);
    Vector a(4), b(4);
    a << 1, 2, 2, 3;
    b << 1, 2, 3, 4;
    // ranks of a: 0, 1.5, 1.5, 3
    Vector ra(4), rb(4);
    ra << 0, 1.5, 1.5, 3;
    rb << 0, 1, 2, 3;
    EXPECT_NEAR(spearman(a, b), linalg::pearson(ra, rb), 1e-15);
}

TEST(Report, PerfectSelfComparison)
{
    const auto& d = support::default_dataset();
    const MatchReport rep = report(d.w, d.h, d.p, relative_residual(d.m.values(), d.w, d.h),
                                   TruthFactors{d.w, d.h, d.p});
    EXPECT_LE(rep.residual, 1e-8);
    for (double c : *rep.correlations) {
        EXPECT_GE(c, 1.0 - 1e-8);
    }
    for (double e : *rep.kinetics_rmse) {
        EXPECT_EQ(e, 0.0);
    }
    EXPECT_EQ(*rep.p_max_error, 0.0);
    EXPECT_LE(rep.h_colsum_dev, 1e-12);
}

TEST(Report, ExactlyStochasticKineticsHaveZeroDeviation)
{
    const Matrix h = Matrix::Constant(4, 6, 0.25);
    const MatchReport rep = report(Matrix::Ones(3, 4), h, Matrix::Identity(4, 4), 0.0);
    EXPECT_EQ(rep.h_colsum_dev, 0.0);
    EXPECT_FALSE(rep.permutation);
    EXPECT_FALSE(rep.correlations);
}

TEST(Report, PaperTransitionMatrixArithmetic)
{
    const Matrix p = paper_p_rec();
    const MatchReport rep = report(Matrix::Ones(5, 3), Matrix::Constant(3, 4, 1.0 / 3.0), p, 0.0);
    EXPECT_EQ(rep.p_rowsum_dev, 0.0);
    EXPECT_EQ(rep.min_entries.p, -0.01);
}

TEST(Report, PermutedRecoveryGivesInversePermutation)
{
    const auto& d = support::default_dataset();
    const std::vector<int> sigma{2, 0, 4, 1, 3};   // recovered column i is true column sigma[i]
    Matrix w(d.w.rows(), 5), h(5, d.h.cols());
    for (int i = 0; i < 5; ++i) {
        w.col(i) = d.w.col(sigma[static_cast<std::size_t>(i)]);
        h.row(i) = d.h.row(sigma[static_cast<std::size_t>(i)]);
    }
    Matrix p(5, 5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            p(i, j) = d.p(sigma[static_cast<std::size_t>(i)], sigma[static_cast<std::size_t>(j)]);
        }
    }
    const MatchReport rep = report(w, h, p, 0.0, TruthFactors{d.w, d.h, d.p});
    EXPECT_EQ(*rep.permutation, sigma);
    EXPECT_LE(*rep.p_max_error, 1e-15);
    for (double e : *rep.kinetics_rmse) {
        EXPECT_EQ(e, 0.0);
    }
}

TEST(Report, ColumnPermutationKeepsCorrelationMultiset)
{
    const auto& d = support::default_dataset();
    const Matrix w_rec = d.w + 0.5 * random_matrix(d.w.rows(), 5, 9, 0.0, 1.0);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 4, 3, 0, 2, 1;
    const Matrix pi = perm * Matrix::Identity(5, 5);
    const MatchReport a = report(w_rec, d.h, d.p, 0.0, TruthFactors{d.w, d.h, std::nullopt});
    const MatchReport b = report(w_rec * pi, pi.transpose() * d.h, pi.transpose() * d.p * pi, 0.0,
                                 TruthFactors{d.w, d.h, std::nullopt});
    std::vector<double> ca = *a.correlations, cb = *b.correlations;
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    for (std::size_t i = 0; i < ca.size(); ++i) {
        EXPECT_NEAR(ca[i], cb[i], 1e-15);
    }
}

TEST(Report, ShapeMismatchesAreNamed)
{
    const auto& d = support::default_dataset();
    EXPECT_THROW(report(d.w, d.h.leftCols(10), d.p, 0.0, TruthFactors{d.w, d.h, std::nullopt}), DataError);
    EXPECT_THROW(report(d.w, d.h, Matrix::Identity(4, 4), 0.0), DataError);
}
