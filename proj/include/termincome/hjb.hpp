#pragma once

#include <Eigen/Core>

#include "termincome/market.hpp"

namespace termincome {

/// Uniform wealth grid, stored in descending order x_max = x_0 > ... > x_{n-1} = 0.
/// Node i sits at (n-1-i) * h exactly, so the last node is exactly zero.
struct WealthGrid {
    double x_max;
    Eigen::Index n;

    WealthGrid(double x_max_, Eigen::Index n_);

    double spacing() const { return x_max / static_cast<double>(n - 1); }
    double node(Eigen::Index i) const {
        return static_cast<double>(n - 1 - i) * spacing();
    }
    Eigen::ArrayXd nodes() const;

    /// Index of the grid node closest to x.
    Eigen::Index index_of(double x) const;
};

/// Backward-integrated value function on a wealth grid: value, its first two
/// derivatives, the marginal utility at zero wealth and the worst interior
/// ODE residual (computed with centered-difference curvature).
struct ValueSolution {
    WealthGrid grid;
    MarketParams params;
    Eigen::ArrayXd u1;    ///< value per node
    Eigen::ArrayXd du1;   ///< first derivative per node
    Eigen::ArrayXd ddu1;  ///< curvature per node, as evaluated by the integrator
    double y_star;        ///< du1 at x = 0 (finite marginal utility at zero wealth)
    double residual_max;  ///< worst |ODE residual| over interior nodes

    double value_at(double x) const;       ///< linear interpolation on the grid
    double derivative_at(double x) const;  ///< linear interpolation of du1
};

/// Feedback controls extracted from a ValueSolution. theta1 holds pi/x at
/// every node except x = 0, where the investment pi itself is stored (the
/// proportion diverges there). pi1 carries the raw investment at all nodes.
struct FeedbackPolicy {
    WealthGrid grid;
    Eigen::ArrayXd c1;      ///< consumption rate per node
    Eigen::ArrayXd pi1;     ///< wealth in stock per node
    Eigen::ArrayXd theta1;  ///< pi/x per node; pi itself at x = 0
};

/// Curvature u'' = (lambda^2 / 2) (u')^2 / D with
/// D = V(u') + eta u0(x) + (r x + a) u' - alpha u, the unique rearrangement
/// of the pre-termination value ODE. Negative on the solution branch.
/// Throws DegenerateMarketError when lambda = 0 and SingularDenominatorError
/// when |D| < 1e-12 (1 + |alpha u|).
double hjb_curvature(double x, double u, double du, const MarketParams& params);

/// Asymptotic data at the right edge: u = u0(x_bar + a/(r+eta)) and its
/// derivative. Returns {u, du, warn} where warn flags x_bar too small
/// (perpetual/no-income envelopes more than 1% apart at x_bar).
struct BoundaryData {
    double u;
    double du;
    bool x_bar_too_small;
};
BoundaryData boundary_condition(double x_bar, const MarketParams& params);

/// Classical fourth-order Runge-Kutta backward sweep of (u, u')' = (u', u'')
/// from x_max down to 0 with fixed step -h. Fills the solution arrays,
/// checks monotonicity/concavity/envelope invariants, and records the
/// centered-difference ODE residual.
ValueSolution solve_hjb(const MarketParams& params, const WealthGrid& grid);

/// c1 = I(u1'), pi1 = -(lambda/sigma) u1'/u1'', theta1 = pi1/x (pi1 at x=0).
FeedbackPolicy extract_feedback(const ValueSolution& sol, const MarketParams& params);

/// Discrete Legendre-Fenchel transform of a ValueSolution on a dual grid
/// y_grid inside (0, y_star), plus the biconjugate round trip on the wealth grid.
struct ConjugateTransform {
    Eigen::ArrayXd y;        ///< dual grid
    Eigen::ArrayXd v;        ///< v(y) = max_x [u1(x) - x y]
    Eigen::ArrayXd argmax_x; ///< maximizing node (smallest x among ties)
    Eigen::ArrayXd u_round;  ///< min_y [v(y) + x y] on the wealth grid
};
ConjugateTransform conjugate_transform(const ValueSolution& sol, const Eigen::ArrayXd& y_grid);

}  // namespace termincome
