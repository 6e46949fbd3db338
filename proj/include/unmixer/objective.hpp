#ifndef UNMIXER_OBJECTIVE_HPP
#define UNMIXER_OBJECTIVE_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "unmixer/numerics.hpp"
#include "unmixer/preprocess.hpp"

namespace unmixer {

/// Coefficients of the five penalty terms. Signs are not constrained.
struct PenaltyWeights {
    double alpha = 0.0;   ///< min entry of W
    double beta = 0.0;    ///< min entry of H
    double gamma = 0.0;   ///< max column-sum deviation of H
    double delta = 0.0;   ///< min entry of P
    double mu = 0.0;      ///< max row-sum deviation of P

    bool all_finite() const noexcept
    {
        return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma) && std::isfinite(delta)
            && std::isfinite(mu);
    }
};

/// Weights used for the synthetic five-species experiments.
inline constexpr PenaltyWeights synthetic_recovery_weights() noexcept
{
    return {-0.0001, -1.0, 1.0, 0.0, 0.0};
}

/// Weights focused on feasible concentrations and a stochastic transition matrix.
inline constexpr PenaltyWeights feasible_concentration_weights() noexcept
{
    return {0.00001, 100.0, 100.0, 1.0, 1.0};
}

/// Looks up a named weight preset ("paper-4.2"/"synthetic", "paper-4.4"/"feasible").
inline std::optional<PenaltyWeights> weight_preset(std::string_view name) noexcept
{
    if (name == "paper-4.2" || name == "synthetic") {
        return synthetic_recovery_weights();
    }
    if (name == "paper-4.4" || name == "feasible") {
        return feasible_concentration_weights();
    }
    return std::nullopt;
}

/// Candidate spectra (n x r), kinetics (r x m) and transition matrix (r x r).
struct CandidateFactors {
    Matrix w;
    Matrix h;
    Matrix p;
};

struct PenaltyBreakdown {
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;
    double p4 = 0.0;
    double p5 = 0.0;
    double psi = 0.0;
    double psi_squared = 0.0;
    bool singular = false;   ///< transform was not invertible; all values are +inf
};

/// Sums the terms left to right; psi_squared is psi * psi.
inline PenaltyBreakdown make_breakdown(double p1, double p2, double p3, double p4, double p5)
{
    PenaltyBreakdown b{p1, p2, p3, p4, p5, 0.0, 0.0, false};
    b.psi = p1 + p2 + p3 + p4 + p5;
    b.psi_squared = b.psi * b.psi;
    return b;
}

inline PenaltyBreakdown singular_breakdown()
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    PenaltyBreakdown b = make_breakdown(inf, inf, inf, inf, inf);
    b.singular = true;
    return b;
}

/// Inverse of an r x r transform; NumericalError when it is numerically singular.
inline Matrix invert_transform(const Matrix& a)
{
    if (a.rows() != a.cols()) {
        throw DataError("transform must be square, got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    if (!a.allFinite()) {
        throw NumericalError("transform contains non-finite entries");
    }
    const Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > static_cast<double>(a.rows()) * linalg::eps)) {
        throw NumericalError("transform is numerically singular (rcond " + std::to_string(rcond) + ")");
    }
    Matrix inv = lu.inverse();
    if (!inv.allFinite()) {
        throw NumericalError("transform inverse overflowed");
    }
    return inv;
}

/// Factors induced by transform a:
///   h = (u a)^T,  w = M pinv(a^T u^T) = (M u) a^{-T},  p = a^{-1} s a.
/// The closed forms for w and p rely on u having orthonormal columns.
inline CandidateFactors assemble(const Matrix& a, const PccaContext& ctx)
{
    const Eigen::Index r = ctx.rank();
    if (a.rows() != r || a.cols() != r) {
        throw DataError("assemble: transform must be " + std::to_string(r) + "x" + std::to_string(r) + ", got "
                        + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    const Matrix a_inv = invert_transform(a);
    CandidateFactors f;
    f.h = (ctx.u * a).transpose();
    f.w = ctx.data_times_u * a_inv.transpose();
    f.p = a_inv * ctx.s * a;
    return f;
}

/// Weighted penalty terms of already assembled factors.
inline PenaltyBreakdown penalties(const CandidateFactors& f, const PenaltyWeights& weights)
{
    const double h_colsum_dev = (f.h.colwise().sum().array() - 1.0).abs().maxCoeff();
    const double p_rowsum_dev = (f.p.rowwise().sum().array() - 1.0).abs().maxCoeff();
    return make_breakdown(weights.alpha * f.w.minCoeff(),
                          weights.beta * f.h.minCoeff(),
                          weights.gamma * h_colsum_dev,
                          weights.delta * f.p.minCoeff(),
                          weights.mu * p_rowsum_dev);
}

/// Penalty objective at transform a. A singular transform yields the +inf sentinel.
inline PenaltyBreakdown psi(const Matrix& a, const PenaltyWeights& weights, const PccaContext& ctx)
{
    CandidateFactors f;
    try {
        f = assemble(a, ctx);
    } catch (const NumericalError&) {
        return singular_breakdown();
    }
    return penalties(f, weights);
}

/// Row-major flattening of an r x r transform into r^2 optimizer variables.
inline Vector flatten(const Matrix& a)
{
    Vector x(a.size());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            x(i * a.cols() + j) = a(i, j);
        }
    }
    return x;
}

inline Matrix unflatten(const Vector& x, Eigen::Index r)
{
    if (x.size() != r * r) {
        throw DataError("unflatten: expected " + std::to_string(r * r) + " values, got " + std::to_string(x.size()));
    }
    Matrix a(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) {
            a(i, j) = x(i * r + j);
        }
    }
    return a;
}

/// x -> psi(unflatten(x))^2, the scalar objective handed to the optimizer.
/// Holds a reference to the context, which must outlive it.
class PsiSquared {
public:
    PsiSquared(const PenaltyWeights& weights, const PccaContext& ctx) : weights_(weights), ctx_(&ctx) {}

    double operator()(const Vector& x) const
    {
        return psi(unflatten(x, ctx_->rank()), weights_, *ctx_).psi_squared;
    }

    Eigen::Index dimension() const noexcept { return ctx_->rank() * ctx_->rank(); }

private:
    PenaltyWeights weights_;
    const PccaContext* ctx_;
};

inline PsiSquared psi_squared_fn(const PenaltyWeights& weights, const PccaContext& ctx)
{
    return PsiSquared(weights, ctx);
}

} // namespace unmixer

#endif // UNMIXER_OBJECTIVE_HPP
