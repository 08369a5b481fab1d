#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "termincome/hjb.hpp"
#include "termincome/market.hpp"
#include "termincome/stats.hpp"

namespace termincome {

/// Time discretisation and ensemble size for the Monte Carlo engine.
struct PathConfig {
    double dt = 0.01;
    double t_max = 25.0;
    Eigen::Index n_paths = 20000;
    std::uint64_t seed = 42;
    bool antithetic = true;
    Eigen::Index record_stride = 25;  ///< spacing of recorded time nodes for curves

    Eigen::Index steps() const;  ///< t_max / dt, validated integral
    void validate() const;
};

/// Constant dual control: Y_t = y e^{-rt} Z0_t Gamma_t with Gamma the
/// stochastic exponential of -gamma dM.
struct DeflatorSpec {
    double gamma = 0.0;  ///< must be > -1
    double y = 1.0;      ///< initial dual value, > 0
};

/// Jump deflator Gamma_t = e^{-eta gamma (t ^ tau)} (1+gamma)^{1{t >= tau}}.
double jump_deflator(double t, double tau, double gamma, double eta);

/// Feedback consumption/investment rules the engine can run.
class ControlSpec {
public:
    enum class Kind {
        MertonNoIncome,       ///< c = K x, pi = m x
        MertonPerpetual,      ///< c = K (x + a/r), pi = m (x + a/r); wealth floor -a/r
        SolvedPolicy,         ///< interpolated (c1, pi1) regardless of income state
        ConstantConsumption,  ///< c = min(cbar, feasible), pi = 0
        RegimeSwitch,         ///< solved policy while income lives, Merton after
        IncomePlusInterest,   ///< c = f + r x, pi = 0
    };

    static ControlSpec merton_no_income() { return ControlSpec(Kind::MertonNoIncome); }
    static ControlSpec merton_perpetual() { return ControlSpec(Kind::MertonPerpetual); }
    static ControlSpec constant_consumption(double cbar);
    static ControlSpec income_plus_interest() { return ControlSpec(Kind::IncomePlusInterest); }
    static ControlSpec solved_policy(const ValueSolution& sol, const FeedbackPolicy& policy);
    static ControlSpec regime_switch(const ValueSolution& sol, const FeedbackPolicy& policy);

    Kind kind() const { return kind_; }
    bool riskless() const {
        return kind_ == Kind::ConstantConsumption || kind_ == Kind::IncomePlusInterest;
    }
    /// Natural lower wealth bound of the control's own problem.
    double wealth_floor(const MarketParams& params) const {
        return kind_ == Kind::MertonPerpetual ? -params.a / params.r : 0.0;
    }
    /// Continuation value at the floor (used as the restart credit for
    /// absorbed paths). Nonzero only for the solved policy while income lives.
    double value_at_floor(bool income_on) const {
        return income_on ? value_at_zero_ : 0.0;
    }

    /// Consumption and investment at wealth x, given the income state.
    LinearPolicyPoint evaluate(double x, bool income_on, const MarketParams& params) const;

private:
    explicit ControlSpec(Kind k) : kind_(k) {}

    LinearPolicyPoint lookup(double x, const MarketParams& params) const;

    Kind kind_;
    double cbar_ = 0.0;
    double value_at_zero_ = 0.0;
    // solved policy tables, ascending in x
    Eigen::ArrayXd xs_, c_, pi_;
};

/// One simulated path on the uniform time grid.
struct PathSample {
    Eigen::ArrayXd X;      ///< wealth at grid times
    Eigen::ArrayXd Z;      ///< Brownian deflator E(-lambda W), exact increments
    Eigen::ArrayXd Gamma;  ///< jump deflator for the ensemble's gamma
    Eigen::ArrayXd c;      ///< realized consumption rate
    Eigen::ArrayXd N;      ///< income indicator 1{t < tau}
    double tau = 0.0;
    Eigen::Index absorbed_step = -1;  ///< first grid index at the floor, -1 if never
    double deficit = 0.0;             ///< overshoot X - floor at absorption (<= 0)
};

/// Seeded ensemble of controlled-wealth and deflator paths. Paths are
/// regenerated deterministically per index from (seed, index)-derived
/// substreams, so consumers stream through them without storing the ensemble.
class PathEnsemble {
public:
    PathEnsemble(double x0, ControlSpec control, DeflatorSpec deflator, MarketParams params,
                 PathConfig cfg);

    double x0() const { return x0_; }
    const ControlSpec& control() const { return control_; }
    const DeflatorSpec& deflator() const { return deflator_; }
    const MarketParams& params() const { return params_; }
    const PathConfig& config() const { return cfg_; }
    Eigen::Index steps() const { return m_; }
    Eigen::ArrayXd times() const;
    double wealth_floor() const { return floor_; }

    /// Deterministically (re)generates path i into out.
    void simulate_path(Eigen::Index i, PathSample& out) const;

    /// Visits every path with a thread pool over fixed index blocks; the
    /// visitor must only write to per-index slots.
    template <class Visitor>
    void for_each_path(Visitor&& visit) const {
        parallel_blocks(cfg_.n_paths, 256, [&](Eigen::Index lo, Eigen::Index hi) {
            PathSample buffer;
            for (Eigen::Index i = lo; i < hi; ++i) {
                simulate_path(i, buffer);
                visit(i, buffer);
            }
        });
    }

private:
    double x0_;
    ControlSpec control_;
    DeflatorSpec deflator_;
    MarketParams params_;
    PathConfig cfg_;
    Eigen::Index m_;
    double floor_;
};

/// Monte Carlo estimate plus diagnostics common to the integral estimators.
struct EstimateResult {
    MeanSe value;
    double absorbed_fraction = 0.0;  ///< share of paths that hit the floor
    double boundary_credit = 0.0;    ///< mean discounted restart credit included
    double analytic_tail = 0.0;      ///< closed-form mass beyond t_max included
};

/// E[ integral U(c) d kappa ] per path (trapezoid), with the terminal-wealth
/// atom when the measure carries one. Absorbed paths collect the control's
/// discounted continuation value at the floor.
EstimateResult estimate_primal(const PathEnsemble& ensemble, const DiscountMeasure& measure);

/// E[ integral (V(zeta Y) + f zeta Y) d kappa ] per path for the given
/// constant-gamma deflator, plus the closed-form tail beyond t_max.
EstimateResult estimate_dual(const PathEnsemble& ensemble, const DeflatorSpec& deflator,
                             const DiscountMeasure& measure, const MarketParams& params);

/// E[ integral (c - f) Y dt ] per path, trapezoid, stopped at absorption.
EstimateResult estimate_budget(const PathEnsemble& ensemble, const DeflatorSpec& deflator);

/// E[ integral U'(c)(c - f) d kappa ] per path, stopped at absorption.
EstimateResult estimate_derivative_formula(const PathEnsemble& ensemble,
                                           const DiscountMeasure& measure);

/// Time curves of E[X_t Y_t] and of the deflated-wealth-plus-net-consumption
/// process E[Lambda_t]. Lambda uses the left-endpoint (Ito) rule and settles
/// with the overshoot deficit at absorption, so it stays a discrete
/// (super)martingale under the exact deflator increments.
struct DeflatedCurves {
    Eigen::ArrayXd times;
    std::vector<MeanSe> xy;
    std::vector<MeanSe> lambda;
};
DeflatedCurves deflated_wealth_curves(const PathEnsemble& ensemble,
                                      const DeflatorSpec& deflator);

/// Closed-form time-t mean of the dual integrand and its ingredients for a
/// constant-gamma deflator; the deterministic oracle behind the dual checks.
struct ConstantGammaDual {
    double rho;   ///< exponential decay rate of the V-part mean
    double C;     ///< integral of e^{rho t} E[Gamma^q] over [0, inf)
    double D;     ///< deflated income value a / (r + eta (1+gamma))
    /// v_gamma(y) = C * V(y) + D * y  (V the conjugate of power utility)
    double value(double y, const MarketParams& params) const;
    /// min over y > 0 of v_gamma(y) + x y, and the minimizing y.
    std::pair<double, double> min_plus_xy(double x, const MarketParams& params) const;
};
ConstantGammaDual constant_gamma_dual(double gamma, const MarketParams& params);

/// Closed-form mass of the dual objective beyond t_max (per unit y-power).
double dual_tail(double gamma, double y, double t_max, const MarketParams& params);

}  // namespace termincome
