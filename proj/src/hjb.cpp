#include "termincome/hjb.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "termincome/errors.hpp"
#include "termincome/merton.hpp"

namespace termincome {

namespace {

constexpr double kOverflowGuard = 1e15;

double interpolate_descending(const WealthGrid& grid, const Eigen::ArrayXd& values, double x) {
    const double h = grid.spacing();
    const double t = std::min(std::max(x, 0.0), grid.x_max) / h;
    const auto k = static_cast<Eigen::Index>(std::min(t, static_cast<double>(grid.n - 2)));
    const double frac = t - static_cast<double>(k);
    const Eigen::Index lo = grid.n - 1 - k;  // node at k*h
    return (1.0 - frac) * values[lo] + frac * values[lo - 1];
}

}  // namespace

WealthGrid::WealthGrid(double x_max_, Eigen::Index n_) : x_max(x_max_), n(n_) {
    if (!(x_max > 0.0)) throw ValidationError("wealth grid needs x_max > 0");
    if (n < 3) throw ValidationError("wealth grid needs at least 3 nodes");
}

Eigen::ArrayXd WealthGrid::nodes() const {
    Eigen::ArrayXd xs(n);
    for (Eigen::Index i = 0; i < n; ++i) xs[i] = node(i);
    return xs;
}

Eigen::Index WealthGrid::index_of(double x) const {
    const double t = std::min(std::max(x, 0.0), x_max) / spacing();
    const auto k = static_cast<Eigen::Index>(std::llround(t));
    return n - 1 - std::min(k, n - 1);
}

double ValueSolution::value_at(double x) const { return interpolate_descending(grid, u1, x); }
double ValueSolution::derivative_at(double x) const {
    return interpolate_descending(grid, du1, x);
}

double hjb_curvature(double x, double u, double du, const MarketParams& params) {
    if (params.lambda == 0.0)
        throw DegenerateMarketError("lambda = 0: value ODE has no second-order term");
    if (!(du > 0.0)) {
        std::ostringstream os;
        os << "hjb_curvature: nonpositive marginal value " << du << " at x = " << x;
        throw SingularDenominatorError(os.str());
    }
    const auto d = derive_constants(params);
    const PowerUtility util(params.p);
    const double denom = util.conjugate(du) + params.eta * merton_value(x, params) +
                         (params.r * x + params.a) * du - d.alpha * u;
    if (std::abs(denom) < 1e-12 * (1.0 + std::abs(d.alpha * u))) {
        std::ostringstream os;
        os << "hjb_curvature: denominator " << denom << " vanishes at x = " << x;
        throw SingularDenominatorError(os.str());
    }
    return 0.5 * params.lambda * params.lambda * du * du / denom;
}

BoundaryData boundary_condition(double x_bar, const MarketParams& params) {
    const double shift = params.a / (params.r + params.eta);
    const double u = merton_value(x_bar + shift, params);
    const double du = merton_value_derivative(x_bar + shift, params);
    const double u0 = merton_value(x_bar, params);
    const bool warn = perpetual_value(x_bar, params) - u0 > 0.01 * u0;
    return {u, du, warn};
}

ValueSolution solve_hjb(const MarketParams& params, const WealthGrid& grid) {
    const auto d = derive_constants(params);
    if (params.lambda == 0.0)
        throw DegenerateMarketError("lambda = 0: value ODE has no second-order term");

    const Eigen::Index n = grid.n;
    const double h = grid.spacing();
    const double s = -h;  // backward step

    ValueSolution sol{grid, params, Eigen::ArrayXd(n), Eigen::ArrayXd(n), Eigen::ArrayXd(n),
                      0.0, 0.0};

    const auto bc = boundary_condition(grid.x_max, params);
    double u = bc.u;
    double w = bc.du;
    sol.u1[0] = u;
    sol.du1[0] = w;
    sol.ddu1[0] = hjb_curvature(grid.x_max, u, w, params);

    for (Eigen::Index i = 0; i < n - 1; ++i) {
        // stage abscissae from integer multiples of h, so they never dip below 0
        const double m = static_cast<double>(n - 1 - i);
        const double x0 = m * h;
        const double xm = (m - 0.5) * h;
        const double x1 = (m - 1.0) * h;

        const double k1u = w, k1w = hjb_curvature(x0, u, w, params);
        const double k2u = w + 0.5 * s * k1w;
        const double k2w = hjb_curvature(xm, u + 0.5 * s * k1u, k2u, params);
        const double k3u = w + 0.5 * s * k2w;
        const double k3w = hjb_curvature(xm, u + 0.5 * s * k2u, k3u, params);
        const double k4u = w + s * k3w;
        const double k4w = hjb_curvature(x1, u + s * k3u, k4u, params);

        u += s * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0;
        w += s * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0;

        if (!(std::abs(w) < kOverflowGuard) || !std::isfinite(u)) {
            std::ostringstream os;
            os << "backward sweep blew up before reaching zero wealth; smallest node reached x = "
               << x1 << " (index " << i + 1 << ")";
            throw SolverBlowupError(os.str());
        }

        sol.u1[i + 1] = u;
        sol.du1[i + 1] = w;
        sol.ddu1[i + 1] = hjb_curvature(x1, u, w, params);
        if (!(std::abs(sol.ddu1[i + 1]) < kOverflowGuard)) {
            std::ostringstream os;
            os << "curvature overflow at node index " << i + 1;
            throw SolverBlowupError(os.str());
        }
    }
    sol.y_star = sol.du1[n - 1];

    // invariants: increasing, concave, between the no-income and perpetual envelopes.
    // The envelope check carries a tiny relative slack so that the exact
    // reductions (a = 0, eta = 0), where the sandwich collapses to equality,
    // pass through roundoff.
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = grid.node(i);
        if (!(sol.du1[i] > 0.0)) {
            std::ostringstream os;
            os << "monotonicity failed at node " << i << " (x = " << x << ")";
            throw InvariantViolationError(os.str());
        }
        if (!(sol.ddu1[i] < 0.0)) {
            std::ostringstream os;
            os << "concavity failed at node " << i << " (x = " << x << ")";
            throw InvariantViolationError(os.str());
        }
        const double lo = merton_value(x, params);
        const double hi = perpetual_value(x, params);
        const double slack = 1e-9 * (1.0 + std::abs(sol.u1[i]));
        if (sol.u1[i] < lo - slack || sol.u1[i] > hi + slack) {
            std::ostringstream os;
            os << "envelope bounds failed at node " << i << " (x = " << x << "): u0 = " << lo
               << ", u1 = " << sol.u1[i] << ", u_inf = " << hi;
            throw InvariantViolationError(os.str());
        }
    }

    // independent residual: re-evaluate the ODE with centered-difference curvature
    const PowerUtility util(params.p);
    double worst = 0.0;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double x = grid.node(i);
        const double ucc = (sol.u1[i - 1] - 2.0 * sol.u1[i] + sol.u1[i + 1]) / (h * h);
        if (ucc == 0.0) continue;
        const double du = sol.du1[i];
        const double res = util.conjugate(du) + params.eta * merton_value(x, params) +
                           (params.r * x + params.a) * du -
                           0.5 * params.lambda * params.lambda * du * du / ucc -
                           d.alpha * sol.u1[i];
        worst = std::max(worst, std::abs(res));
    }
    sol.residual_max = worst;
    return sol;
}

FeedbackPolicy extract_feedback(const ValueSolution& sol, const MarketParams& params) {
    const Eigen::Index n = sol.grid.n;
    const PowerUtility util(params.p);
    FeedbackPolicy policy{sol.grid, Eigen::ArrayXd(n), Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(sol.ddu1[i]) < 1e-14) {
            std::ostringstream os;
            os << "extract_feedback: curvature below division guard at node " << i;
            throw SingularDenominatorError(os.str());
        }
        policy.c1[i] = util.inverse_marginal(sol.du1[i]);
        policy.pi1[i] = -(params.lambda / params.sigma) * sol.du1[i] / sol.ddu1[i];
        const double x = sol.grid.node(i);
        policy.theta1[i] = (x > 0.0) ? policy.pi1[i] / x : policy.pi1[i];
    }
    return policy;
}

ConjugateTransform conjugate_transform(const ValueSolution& sol, const Eigen::ArrayXd& y_grid) {
    if (y_grid.size() == 0) throw EmptyRangeError("conjugate_transform: empty dual grid");
    for (Eigen::Index j = 0; j < y_grid.size(); ++j) {
        if (!(y_grid[j] > 0.0 && y_grid[j] < sol.y_star)) {
            std::ostringstream os;
            os << "conjugate_transform: y = " << y_grid[j] << " outside (0, " << sol.y_star
               << ")";
            throw EmptyRangeError(os.str());
        }
    }

    const Eigen::Index n = sol.grid.n;
    ConjugateTransform out{y_grid, Eigen::ArrayXd(y_grid.size()), Eigen::ArrayXd(y_grid.size()),
                           Eigen::ArrayXd(n)};
    for (Eigen::Index j = 0; j < y_grid.size(); ++j) {
        double best = -std::numeric_limits<double>::infinity();
        double best_x = 0.0;
        // iterate ascending in x so ties keep the smallest maximizer
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            const double cand = sol.u1[i] - sol.grid.node(i) * y_grid[j];
            if (cand > best) {
                best = cand;
                best_x = sol.grid.node(i);
            }
        }
        out.v[j] = best;
        out.argmax_x[j] = best_x;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = sol.grid.node(i);
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < y_grid.size(); ++j)
            best = std::min(best, out.v[j] + x * y_grid[j]);
        out.u_round[i] = best;
    }
    return out;
}

}  // namespace termincome
