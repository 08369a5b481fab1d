#pragma once

#include <Eigen/Core>
#include <cmath>

#include "termincome/errors.hpp"

namespace termincome {

/// Scalar model and market coefficients of the Black-Scholes market with a
/// randomly terminating income stream, plus the derived constants that every
/// closed form below depends on.
///
/// Units: r, delta, eta are rates (1/time); sigma and lambda scale with
/// 1/sqrt(time); a is wealth/time; p is dimensionless.
struct MarketParams {
    double r = 0.05;       ///< interest rate, r > 0
    double sigma = 0.1;    ///< volatility, sigma > 0
    double lambda = 1.0;   ///< market price of risk
    double delta = 0.6;    ///< impatience rate, delta > 0
    double eta = 0.1;      ///< income termination intensity, eta >= 0
    double a = 0.2;        ///< income rate, a >= 0
    double p = 0.5;        ///< utility exponent, p in (0,1)

    MarketParams() = default;
    MarketParams(double r_, double sigma_, double lambda_, double delta_,
                 double eta_, double a_, double p_)
        : r(r_), sigma(sigma_), lambda(lambda_), delta(delta_), eta(eta_), a(a_) , p(p_) {}

    MarketParams with_a(double a_) const { MarketParams q = *this; q.a = a_; return q; }
    MarketParams with_eta(double eta_) const { MarketParams q = *this; q.eta = eta_; return q; }
};

/// Constants derived from MarketParams: the conjugate exponent q, the Merton
/// constant K (well-posed iff K > 0) and the modified discount alpha = eta + delta.
struct DerivedConstants {
    double q;
    double K;
    double alpha;
};

/// Validates field-level constraints and computes {q, K, alpha}.
/// Throws ValidationError on a bad field and WellPosednessError if K <= 0.
DerivedConstants derive_constants(const MarketParams& params);

/// Power utility U(x) = x^p / p with its marginal, inverse marginal and
/// convex conjugate V(y) = -y^q / q, q = -p/(1-p).
class PowerUtility {
public:
    explicit PowerUtility(double p) : p_(p), q_(-p / (1.0 - p)) {
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("power utility requires p in (0,1)");
    }

    double p() const { return p_; }
    double q() const { return q_; }

    double value(double x) const { return std::pow(x, p_) / p_; }
    double marginal(double x) const { return std::pow(x, p_ - 1.0); }
    /// Inverse of the marginal: I(y) = y^{-1/(1-p)}.
    double inverse_marginal(double y) const { return std::pow(y, -1.0 / (1.0 - p_)); }
    double conjugate(double y) const { return -std::pow(y, q_) / q_; }
    double conjugate_derivative(double y) const { return -std::pow(y, q_ - 1.0); }

    Eigen::ArrayXd value(const Eigen::ArrayXd& x) const { return x.pow(p_) / p_; }
    Eigen::ArrayXd marginal(const Eigen::ArrayXd& x) const { return x.pow(p_ - 1.0); }
    Eigen::ArrayXd inverse_marginal(const Eigen::ArrayXd& y) const {
        return y.pow(-1.0 / (1.0 - p_));
    }
    Eigen::ArrayXd conjugate(const Eigen::ArrayXd& y) const { return -y.pow(q_) / q_; }

private:
    double p_;
    double q_;
};

/// The consumption-weighting measure kappa, its density reciprocal zeta and
/// the income cutoff, in the three horizon variants.
class DiscountMeasure {
public:
    enum class Variant {
        InfiniteHorizon,                  ///< d kappa = e^{-delta t} dt on [0, inf)
        FiniteConsumption,                ///< kappa flat after T
        FiniteConsumptionTerminalWealth,  ///< kappa atom of mass 1 at T, zeta_T = 1
    };

    static DiscountMeasure infinite_horizon(double delta) {
        return DiscountMeasure(Variant::InfiniteHorizon, delta, 0.0);
    }
    static DiscountMeasure finite_consumption(double delta, double T) {
        return DiscountMeasure(Variant::FiniteConsumption, delta, T);
    }
    static DiscountMeasure finite_consumption_terminal_wealth(double delta, double T) {
        return DiscountMeasure(Variant::FiniteConsumptionTerminalWealth, delta, T);
    }

    Variant variant() const { return variant_; }
    double horizon() const { return T_; }
    double delta() const { return delta_; }

    /// d kappa / dt at time t (zero where kappa is flat).
    double density(double t) const {
        if (variant_ != Variant::InfiniteHorizon && t >= T_) return 0.0;
        return std::exp(-delta_ * t);
    }

    /// Cumulative measure kappa(t), including the terminal atom when present.
    double cumulative(double t) const {
        const double cap = (variant_ == Variant::InfiniteHorizon) ? t : std::min(t, T_);
        double k = (1.0 - std::exp(-delta_ * cap)) / delta_;
        if (variant_ == Variant::FiniteConsumptionTerminalWealth && t >= T_) k += 1.0;
        return k;
    }

    /// Mass of the atom at time t (nonzero only at T for the terminal-wealth variant).
    double atom(double t) const {
        return (variant_ == Variant::FiniteConsumptionTerminalWealth && t == T_) ? 1.0 : 0.0;
    }

    /// zeta_t = (d kappa / dt)^{-1}; equals 1 at the terminal atom.
    double zeta(double t) const {
        if (variant_ == Variant::FiniteConsumptionTerminalWealth && t >= T_) return 1.0;
        return std::exp(delta_ * t);
    }

    /// Multiplier applied to the income rate (cuts f at T in the finite variants).
    double income_cutoff(double t) const {
        if (variant_ == Variant::InfiniteHorizon) return 1.0;
        return t < T_ ? 1.0 : 0.0;
    }

private:
    DiscountMeasure(Variant v, double delta, double T) : variant_(v), delta_(delta), T_(T) {}

    Variant variant_;
    double delta_;
    double T_;
};

}  // namespace termincome
