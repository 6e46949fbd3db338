#ifndef UNMIXER_PIPELINE_HPP
#define UNMIXER_PIPELINE_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "unmixer/objective.hpp"
#include "unmixer/optimizer.hpp"
#include "unmixer/pcca.hpp"
#include "unmixer/preprocess.hpp"

namespace unmixer {

/// Where the optimizer starts.
enum class InitMode {
    feasible,   ///< inner simplex followed by the feasibility fill
    simplex,    ///< raw inverse of the inner-simplex vertex rows
};

inline const char* to_string(InitMode mode) noexcept
{
    return mode == InitMode::feasible ? "feasible" : "simplex";
}

struct FactorizeOptions {
    NmOptions optimizer;
    std::size_t restarts = 1;
    std::uint64_t seed = 0;
    InitMode init = InitMode::feasible;
    bool project_feasible = false;   ///< clamp H_rec at zero and renormalize its columns
};

struct RestartOutcome {
    bool ok = false;
    double psi_squared = std::numeric_limits<double>::infinity();
    std::string error;
};

struct Factorization {
    Matrix w_rec;
    Matrix h_rec;
    Matrix p_rec;
    Matrix a_opt;
    PenaltyBreakdown breakdown;          ///< at a_opt
    PenaltyBreakdown initial_breakdown;  ///< at the unperturbed starting transform
    NmResult optimizer;
    double residual = 0.0;               ///< ||M - W_rec H_rec||_F / ||M||_F
    std::size_t best_restart = 0;
    std::vector<RestartOutcome> restarts;
    std::vector<Eigen::Index> vertex_indices;
    double init_condition = 0.0;
    bool projected = false;
};

/// H_rec, W_rec and P_rec for a final transform. Same formulas as assemble().
inline CandidateFactors recover(const Matrix& a_opt, const PccaContext& ctx)
{
    return assemble(a_opt, ctx);
}

inline double relative_residual(const Matrix& m, const Matrix& w, const Matrix& h)
{
    const double denom = m.norm();
    const double diff = (m - w * h).norm();
    return denom > 0.0 ? diff / denom : diff;
}

/// Clamps negative concentrations to zero and rescales every column to sum to one.
/// A column that is entirely non-positive becomes uniform.
inline Matrix project_columns_to_simplex(const Matrix& h)
{
    Matrix out = h.cwiseMax(0.0);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double s = out.col(j).sum();
        if (s > 0.0) {
            out.col(j) /= s;
        } else {
            out.col(j).setConstant(1.0 / static_cast<double>(out.rows()));
        }
    }
    return out;
}

/// Starting transform for the optimizer together with its vertex diagnostics.
inline pcca::SimplexInit starting_transform(const PccaContext& ctx, InitMode mode)
{
    pcca::SimplexInit init = pcca::initial_transform(ctx.u, pcca::inner_simplex_indices(ctx.u));
    if (mode == InitMode::feasible) {
        init.a_init = pcca::feasible_transform(ctx.u, init.a_init);
        init.min_entry = (ctx.u * init.a_init).minCoeff();
    }
    return init;
}

/// Minimizes psi^2 over the transform from the PCCA+ start and from
/// (restarts - 1) seeded entrywise perturbations of it (factors in [0.9, 1.1]).
/// The restart with the smallest psi^2 wins; ties go to the lower index.
inline Factorization factorize(const PccaContext& ctx, const PenaltyWeights& weights,
                               const FactorizeOptions& options = {})
{
    if (options.restarts < 1) {
        throw ConfigError("factorize: restarts must be at least 1");
    }
    if (!weights.all_finite()) {
        throw ConfigError("factorize: penalty weights must be finite");
    }
    options.optimizer.validate();

    const Eigen::Index r = ctx.rank();
    const pcca::SimplexInit init = starting_transform(ctx, options.init);
    const PsiSquared objective = psi_squared_fn(weights, ctx);

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> factor(0.9, 1.1);

    Factorization out;
    out.vertex_indices = init.vertex_indices;
    out.init_condition = init.condition;
    out.initial_breakdown = psi(init.a_init, weights, ctx);

    bool have_best = false;
    NmResult best;
    std::string causes;
    for (std::size_t k = 0; k < options.restarts; ++k) {
        Matrix start = init.a_init;
        if (k > 0) {
            for (Eigen::Index i = 0; i < r; ++i) {
                for (Eigen::Index j = 0; j < r; ++j) {
                    start(i, j) *= factor(rng);
                }
            }
        }
        RestartOutcome outcome;
        try {
            NmResult res = nelder_mead(objective, flatten(start), options.optimizer);
            outcome.ok = true;
            outcome.psi_squared = res.f_opt;
            if (!have_best || res.f_opt < best.f_opt) {
                best = std::move(res);
                out.best_restart = k;
                have_best = true;
            }
        } catch (const Error& e) {
            outcome.error = e.what();
            causes += "\n  restart " + std::to_string(k) + ": " + e.what();
        }
        out.restarts.push_back(std::move(outcome));
    }
    if (!have_best) {
        throw NumericalError("factorize: all " + std::to_string(options.restarts) + " restarts failed:" + causes);
    }

    out.a_opt = unflatten(best.x_opt, r);
    CandidateFactors rec = recover(out.a_opt, ctx);
    out.breakdown = penalties(rec, weights);
    out.optimizer = std::move(best);
    if (options.project_feasible) {
        rec.h = project_columns_to_simplex(rec.h);
        out.projected = true;
    }
    out.w_rec = std::move(rec.w);
    out.h_rec = std::move(rec.h);
    out.p_rec = std::move(rec.p);
    out.residual = relative_residual(ctx.data.values(), out.w_rec, out.h_rec);
    return out;
}

inline Factorization factorize(const SpectralMatrix& m, Eigen::Index r, const PenaltyWeights& weights,
                               const FactorizeOptions& options = {})
{
    return factorize(build_context(m, r), weights, options);
}

} // namespace unmixer

#endif // UNMIXER_PIPELINE_HPP
