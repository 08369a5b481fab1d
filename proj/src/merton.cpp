#include "termincome/merton.hpp"

#include <cmath>

#include "termincome/errors.hpp"

namespace termincome {

double merton_value(double x, const MarketParams& params) {
    const auto d = derive_constants(params);
    if (x < 0.0) throw Error("merton_value: wealth must be >= 0");
    if (x == 0.0) return 0.0;
    return std::pow(d.K, -(1.0 - params.p)) * std::pow(x, params.p) / params.p;
}

Eigen::ArrayXd merton_value(const Eigen::ArrayXd& x, const MarketParams& params) {
    const auto d = derive_constants(params);
    const double scale = std::pow(d.K, -(1.0 - params.p));
    // x^p evaluates to 0 at x = 0 for p in (0,1); no special casing needed
    return scale * x.pow(params.p) / params.p;
}

double merton_value_derivative(double x, const MarketParams& params) {
    const auto d = derive_constants(params);
    return std::pow(d.K, -(1.0 - params.p)) * std::pow(x, params.p - 1.0);
}

double perpetual_value(double x, const MarketParams& params) {
    const double shifted = x + params.a / params.r;
    if (!(shifted > 0.0)) throw Error("perpetual_value: requires x > -a/r");
    return merton_value(shifted, params);
}

Eigen::ArrayXd perpetual_value(const Eigen::ArrayXd& x, const MarketParams& params) {
    return merton_value(Eigen::ArrayXd(x + params.a / params.r), params);
}

double merton_proportion(const MarketParams& params) {
    return params.lambda / (params.sigma * (1.0 - params.p));
}

LinearPolicyPoint merton_feedback(double x, const MarketParams& params, double income_shift) {
    const auto d = derive_constants(params);
    const double w = x + income_shift;
    if (w < 0.0) throw Error("merton_feedback: x + shift must be >= 0");
    return {d.K * w, merton_proportion(params) * w};
}

double merton_wealth_closed_form(double t, double brownian_deflator_value, double x,
                                 const MarketParams& params) {
    const auto d = derive_constants(params);
    if (!(brownian_deflator_value > 0.0))
        throw Error("merton_wealth_closed_form: deflator must be > 0");
    const double annuity = params.a / params.r;
    if (!(x + annuity > 0.0)) throw Error("merton_wealth_closed_form: requires x > -a/r");
    const double growth = std::exp((params.r - params.delta) * (1.0 - d.q) * t);
    return (x + annuity) * growth * std::pow(brownian_deflator_value, -(1.0 - d.q)) - annuity;
}

}  // namespace termincome
