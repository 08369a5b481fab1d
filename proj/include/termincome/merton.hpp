#pragma once

#include <Eigen/Core>

#include "termincome/market.hpp"

namespace termincome {

/// Consumption rate and wealth-in-stock of the linear closed-form policies.
struct LinearPolicyPoint {
    double c;
    double pi;
};

/// No-income value function u0(x) = K^{-(1-p)} x^p / p; u0(0) = 0.
double merton_value(double x, const MarketParams& params);
Eigen::ArrayXd merton_value(const Eigen::ArrayXd& x, const MarketParams& params);

/// First derivative u0'(x) = K^{-(1-p)} x^{p-1}.
double merton_value_derivative(double x, const MarketParams& params);

/// Perpetual-income value u_inf(x) = u0(x + a/r), defined for x > -a/r.
double perpetual_value(double x, const MarketParams& params);
Eigen::ArrayXd perpetual_value(const Eigen::ArrayXd& x, const MarketParams& params);

/// Linear feedback c = K (x + shift), pi = lambda/(sigma (1-p)) (x + shift).
/// shift = 0 gives the no-income policy, shift = a/r the perpetual-income one.
LinearPolicyPoint merton_feedback(double x, const MarketParams& params, double income_shift);

/// Merton-ratio wealth multiplier lambda / (sigma (1-p)).
double merton_proportion(const MarketParams& params);

/// Optimal wealth of the perpetual-income problem as a function of the
/// Brownian deflator value: X_t + a/r = (x + a/r) e^{(r-delta)(1-q)t} Z^{-(1-q)}.
double merton_wealth_closed_form(double t, double brownian_deflator_value, double x,
                                 const MarketParams& params);

}  // namespace termincome
