#ifndef UNMIXER_OPTIMIZER_HPP
#define UNMIXER_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "unmixer/numerics.hpp"

namespace unmixer {

struct NmOptions {
    std::optional<std::size_t> max_iter;    ///< default 200 * dim
    std::optional<std::size_t> max_feval;   ///< default 200 * dim
    double tol_x = 1e-6;
    double tol_f = 1e-8;
    double initial_step = 0.05;             ///< relative offset of nonzero coordinates
    double zero_step = 0.00025;             ///< absolute offset of zero coordinates
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;

    void validate() const
    {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!positive(tol_x) || !positive(tol_f)) {
            throw ConfigError("nelder_mead: tolerances must be positive");
        }
        if (!positive(initial_step) || !positive(zero_step)) {
            throw ConfigError("nelder_mead: initial simplex steps must be positive");
        }
        if (!positive(reflection) || !(expansion > reflection) || !std::isfinite(expansion)) {
            throw ConfigError("nelder_mead: need reflection > 0 and expansion > reflection");
        }
        if (!(contraction > 0.0 && contraction < 1.0) || !(shrink > 0.0 && shrink < 1.0)) {
            throw ConfigError("nelder_mead: contraction and shrink must lie in (0, 1)");
        }
        if ((max_iter && *max_iter == 0) || (max_feval && *max_feval == 0)) {
            throw ConfigError("nelder_mead: budgets must be positive");
        }
    }
};

enum class StopReason { tol_x, tol_f, max_iter, max_feval };

inline const char* to_string(StopReason r) noexcept
{
    switch (r) {
    case StopReason::tol_x: return "tol_x";
    case StopReason::tol_f: return "tol_f";
    case StopReason::max_iter: return "max_iter";
    case StopReason::max_feval: return "max_feval";
    }
    return "unknown";
}

struct NmResult {
    Vector x_opt;
    double f_opt = 0.0;
    std::size_t iterations = 0;
    std::size_t fevals = 0;
    StopReason converged_on = StopReason::max_iter;
    std::vector<double> best_trace;   ///< best value after each iteration
};

namespace detail {

    inline std::string format_point(const Vector& x)
    {
        std::ostringstream os;
        os.precision(17);
        os << '(';
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            os << (i ? ", " : "") << x(i);
        }
        os << ')';
        return os.str();
    }

} // namespace detail

/// Nelder-Mead simplex search following the Lagarias et al. formulation
/// (the scheme behind MATLAB's fminsearch).
///
/// Terminates once the simplex is within tol_x of its best vertex (max-norm)
/// and the spread of function values is within tol_f, or when a budget runs
/// out. f may return +inf to reject a point; NaN is an error.
template <class Function>
NmResult nelder_mead(Function&& f, const Vector& x0, const NmOptions& opts = {})
{
    opts.validate();
    if (x0.size() < 1 || !x0.allFinite()) {
        throw DataError("nelder_mead: starting point must be non-empty and finite");
    }
    const Eigen::Index dim = x0.size();
    const std::size_t n = static_cast<std::size_t>(dim);
    const std::size_t max_iter = opts.max_iter.value_or(200 * n);
    const std::size_t max_feval = opts.max_feval.value_or(200 * n);

    NmResult res;
    auto evaluate = [&](const Vector& x) {
        const double v = f(x);
        ++res.fevals;
        if (std::isnan(v)) {
            throw NumericalError("nelder_mead: objective returned NaN at " + detail::format_point(x), res.iterations);
        }
        return v;
    };

    struct Vertex {
        Vector x;
        double f;
        std::uint64_t order;
    };
    std::uint64_t next_order = 0;
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);

    const double f0 = evaluate(x0);
    if (std::isinf(f0) && f0 > 0.0) {
        throw NumericalError("nelder_mead: objective is +inf at the starting point");
    }
    simplex.push_back({x0, f0, next_order++});
    for (Eigen::Index j = 0; j < dim; ++j) {
        Vector y = x0;
        y(j) = y(j) != 0.0 ? (1.0 + opts.initial_step) * y(j) : opts.zero_step;
        const double fy = evaluate(y);
        simplex.push_back({std::move(y), fy, next_order++});
    }

    auto sort_simplex = [&] {
        std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) {
            return a.f < b.f || (a.f == b.f && a.order < b.order);
        });
    };
    sort_simplex();

    const double rho = opts.reflection;
    const double chi = opts.expansion;
    const double psi = opts.contraction;
    const double sigma = opts.shrink;

    bool x_met_before = false;
    bool f_met_before = false;
    std::optional<StopReason> converged;

    while (res.fevals < max_feval && res.iterations < max_iter) {
        double f_spread = 0.0;
        double x_spread = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            f_spread = std::max(f_spread, std::abs(simplex[i].f - simplex[0].f));
            x_spread = std::max(x_spread, (simplex[i].x - simplex[0].x).cwiseAbs().maxCoeff());
        }
        const bool f_met = f_spread <= opts.tol_f;
        const bool x_met = x_spread <= opts.tol_x;
        if (f_met && x_met) {
            if (x_met_before && !f_met_before) {
                converged = StopReason::tol_f;
            } else {
                converged = StopReason::tol_x;
            }
            break;
        }
        x_met_before = x_met;
        f_met_before = f_met;

        Vector centroid = Vector::Zero(dim);
        for (std::size_t i = 0; i < n; ++i) {
            centroid += simplex[i].x;
        }
        centroid /= static_cast<double>(n);

        Vertex& worst = simplex[n];
        const double f_best = simplex[0].f;
        const double f_second_worst = simplex[n - 1].f;

        Vector xr = (1.0 + rho) * centroid - rho * worst.x;
        const double fr = evaluate(xr);

        bool do_shrink = false;
        if (fr < f_best) {
            Vector xe = (1.0 + rho * chi) * centroid - rho * chi * worst.x;
            const double fe = evaluate(xe);
            if (fe < fr) {
                worst = {std::move(xe), fe, next_order++};
            } else {
                worst = {std::move(xr), fr, next_order++};
            }
        } else if (fr < f_second_worst) {
            worst = {std::move(xr), fr, next_order++};
        } else if (fr < worst.f) {
            Vector xc = (1.0 + psi * rho) * centroid - psi * rho * worst.x;
            const double fc = evaluate(xc);
            if (fc <= fr) {
                worst = {std::move(xc), fc, next_order++};
            } else {
                do_shrink = true;
            }
        } else {
            Vector xcc = (1.0 - psi) * centroid + psi * worst.x;
            const double fcc = evaluate(xcc);
            if (fcc < worst.f) {
                worst = {std::move(xcc), fcc, next_order++};
            } else {
                do_shrink = true;
            }
        }

        if (do_shrink) {
            const Vector best = simplex[0].x;
            for (std::size_t i = 1; i <= n; ++i) {
                Vector xs = best + sigma * (simplex[i].x - best);
                const double fs = evaluate(xs);
                simplex[i] = {std::move(xs), fs, next_order++};
            }
        }
        sort_simplex();
        ++res.iterations;
        res.best_trace.push_back(simplex[0].f);
    }

    if (converged) {
        res.converged_on = *converged;
    } else {
        res.converged_on = res.fevals >= max_feval ? StopReason::max_feval : StopReason::max_iter;
    }
    res.x_opt = simplex[0].x;
    res.f_opt = simplex[0].f;
    return res;
}

} // namespace unmixer

#endif // UNMIXER_OPTIMIZER_HPP
