#include "termincome/simulation.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "termincome/errors.hpp"
#include "termincome/merton.hpp"

namespace termincome {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent substream for (seed, purpose tag, index); scheduling-free.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return std::mt19937_64(mix64(mix64(seed ^ mix64(tag)) ^ index));
}

Eigen::ArrayXd grid_times(Eigen::Index m, double dt) {
    Eigen::ArrayXd t(m + 1);
    for (Eigen::Index k = 0; k <= m; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

std::vector<Eigen::Index> record_indices(Eigen::Index m, Eigen::Index stride) {
    std::vector<Eigen::Index> ks;
    for (Eigen::Index k = 0; k < m; k += stride) ks.push_back(k);
    ks.push_back(m);
    return ks;
}

}  // namespace

Eigen::Index PathConfig::steps() const {
    const double ratio = t_max / dt;
    const auto m = static_cast<Eigen::Index>(std::llround(ratio));
    if (m < 1 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("t_max must be an integer multiple of dt");
    return m;
}

void PathConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(t_max > 0.0)) throw ConfigError("t_max must be > 0");
    if (n_paths < 2) throw ConfigError("n_paths must be >= 2");
    if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
    (void)steps();
}

double jump_deflator(double t, double tau, double gamma, double eta) {
    const double stopped = std::min(t, tau);
    double g = std::exp(-eta * gamma * stopped);
    if (t >= tau) g *= 1.0 + gamma;
    return g;
}

ControlSpec ControlSpec::constant_consumption(double cbar) {
    if (!(cbar >= 0.0)) throw ConfigError("constant consumption must be >= 0");
    ControlSpec c(Kind::ConstantConsumption);
    c.cbar_ = cbar;
    return c;
}

ControlSpec ControlSpec::solved_policy(const ValueSolution& sol, const FeedbackPolicy& policy) {
    ControlSpec c(Kind::SolvedPolicy);
    const Eigen::Index n = policy.grid.n;
    c.xs_ = policy.grid.nodes().reverse();
    c.c_ = policy.c1.reverse();
    c.pi_ = policy.pi1.reverse();
    c.value_at_zero_ = sol.u1[n - 1];
    return c;
}

ControlSpec ControlSpec::regime_switch(const ValueSolution& sol, const FeedbackPolicy& policy) {
    ControlSpec c = solved_policy(sol, policy);
    c.kind_ = Kind::RegimeSwitch;
    return c;
}

LinearPolicyPoint ControlSpec::lookup(double x, const MarketParams& params) const {
    const Eigen::Index n = xs_.size();
    const double x_max = xs_[n - 1];
    if (x >= x_max) {
        // extend with the perpetual policy shifted by the asymptotic annuity
        const double shift = params.a / (params.r + params.eta);
        return merton_feedback(x, params, shift);
    }
    const double h = x_max / static_cast<double>(n - 1);
    const double t = std::max(x, 0.0) / h;
    const auto k = static_cast<Eigen::Index>(std::min(t, static_cast<double>(n - 2)));
    const double frac = t - static_cast<double>(k);
    return {(1.0 - frac) * c_[k] + frac * c_[k + 1],
            (1.0 - frac) * pi_[k] + frac * pi_[k + 1]};
}

LinearPolicyPoint ControlSpec::evaluate(double x, bool income_on,
                                        const MarketParams& params) const {
    switch (kind_) {
        case Kind::MertonNoIncome:
            return merton_feedback(std::max(x, 0.0), params, 0.0);
        case Kind::MertonPerpetual:
            return merton_feedback(std::max(x, -params.a / params.r), params,
                                   params.a / params.r);
        case Kind::SolvedPolicy:
            return lookup(x, params);
        case Kind::ConstantConsumption:
            return {cbar_, 0.0};
        case Kind::RegimeSwitch:
            return income_on ? lookup(x, params)
                             : merton_feedback(std::max(x, 0.0), params, 0.0);
        case Kind::IncomePlusInterest:
            return {(income_on ? params.a : 0.0) + params.r * std::max(x, 0.0), 0.0};
    }
    throw Error("unreachable control kind");
}

PathEnsemble::PathEnsemble(double x0, ControlSpec control, DeflatorSpec deflator,
                           MarketParams params, PathConfig cfg)
    : x0_(x0),
      control_(std::move(control)),
      deflator_(deflator),
      params_(params),
      cfg_(cfg) {
    cfg_.validate();
    (void)derive_constants(params_);
    if (!(deflator_.gamma > -1.0)) throw ConfigError("deflator gamma must be > -1");
    if (!(deflator_.y > 0.0)) throw ConfigError("deflator y must be > 0");
    m_ = cfg_.steps();
    floor_ = control_.wealth_floor(params_);
    if (x0_ < floor_) throw ConfigError("initial wealth below the control's wealth floor");
}

Eigen::ArrayXd PathEnsemble::times() const { return grid_times(m_, cfg_.dt); }

void PathEnsemble::simulate_path(Eigen::Index i, PathSample& out) const {
    const double dt = cfg_.dt;
    const double sqdt = std::sqrt(dt);
    const MarketParams& mp = params_;

    if (out.X.size() != m_ + 1) {
        out.X.resize(m_ + 1);
        out.Z.resize(m_ + 1);
        out.Gamma.resize(m_ + 1);
        out.c.resize(m_ + 1);
        out.N.resize(m_ + 1);
    }

    // income clock from its own substream, untouched by antithetic pairing
    {
        auto clock = substream(cfg_.seed, 0xC10C, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(clock);
        out.tau = mp.eta > 0.0 ? -std::log1p(-u) / mp.eta : kInf;
    }

    const bool anti = cfg_.antithetic;
    const std::uint64_t pair = anti ? static_cast<std::uint64_t>(i / 2)
                                    : static_cast<std::uint64_t>(i);
    const double sign = (anti && (i % 2 == 1)) ? -1.0 : 1.0;
    auto brownian = substream(cfg_.seed, 0xB0B, pair);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double gamma = deflator_.gamma;
    const double eg_tau = std::exp(-mp.eta * gamma * out.tau);

    double X = x0_;
    double Z = 1.0;
    bool dead = false;
    out.absorbed_step = -1;
    out.deficit = 0.0;

    for (Eigen::Index k = 0; k <= m_; ++k) {
        const double t = static_cast<double>(k) * dt;
        const bool income_on = t < out.tau;
        out.N[k] = income_on ? 1.0 : 0.0;
        out.Gamma[k] = income_on ? std::exp(-mp.eta * gamma * t) : eg_tau * (1.0 + gamma);
        out.X[k] = X;
        out.Z[k] = Z;

        double c = 0.0, pi = 0.0;
        if (!dead) {
            const auto point = control_.evaluate(X, income_on, mp);
            c = point.c;
            pi = point.pi;
            const double f = income_on ? mp.a : 0.0;
            if (control_.riskless()) {
                // cap consumption so a riskless step can never cross zero
                c = std::min(c, f + X * (1.0 + mp.r * dt) / dt);
            }
        }
        out.c[k] = c;
        if (k == m_) break;

        const double f = income_on ? mp.a : 0.0;
        const double dW = sign * normal(brownian) * sqdt;
        if (!dead) {
            const double Xn =
                X + (mp.r * X - c + f) * dt + mp.sigma * pi * (mp.lambda * dt + dW);
            if (Xn < floor_) {
                dead = true;
                out.absorbed_step = k + 1;
                out.deficit = Xn - floor_;
                X = floor_;
            } else {
                X = Xn;
            }
        }
        Z *= std::exp(-mp.lambda * dW - 0.5 * mp.lambda * mp.lambda * dt);
    }
}

namespace {

struct PerPathReduce {
    Eigen::ArrayXd values;
    Eigen::ArrayXd absorbed;
    Eigen::ArrayXd credit;
};

template <class PathFn>
PerPathReduce reduce_paths(const PathEnsemble& ens, PathFn&& fn) {
    PerPathReduce out;
    out.values.resize(ens.config().n_paths);
    out.absorbed.resize(ens.config().n_paths);
    out.credit = Eigen::ArrayXd::Zero(ens.config().n_paths);
    ens.for_each_path([&](Eigen::Index i, const PathSample& path) {
        out.values[i] = fn(i, path, out.credit[i]);
        out.absorbed[i] = path.absorbed_step >= 0 ? 1.0 : 0.0;
    });
    return out;
}

EstimateResult finish(const PathEnsemble& ens, const PerPathReduce& r) {
    EstimateResult res;
    res.value = mean_se(r.values, ens.config().antithetic);
    res.absorbed_fraction = r.absorbed.mean();
    res.boundary_credit = r.credit.mean();
    return res;
}

double trapezoid_weight(Eigen::Index k, Eigen::Index m, double dt) {
    return (k == 0 || k == m) ? 0.5 * dt : dt;
}

}  // namespace

EstimateResult estimate_primal(const PathEnsemble& ensemble, const DiscountMeasure& measure) {
    const MarketParams& mp = ensemble.params();
    const PowerUtility util(mp.p);
    const Eigen::Index m = ensemble.steps();
    const double dt = ensemble.config().dt;

    Eigen::ArrayXd dens(m + 1);
    for (Eigen::Index k = 0; k <= m; ++k) dens[k] = measure.density(static_cast<double>(k) * dt);
    Eigen::Index atom_k = -1;
    if (measure.variant() == DiscountMeasure::Variant::FiniteConsumptionTerminalWealth &&
        measure.horizon() <= ensemble.config().t_max + 1e-12)
        atom_k = static_cast<Eigen::Index>(std::llround(measure.horizon() / dt));

    auto reduced = reduce_paths(ensemble, [&](Eigen::Index, const PathSample& path,
                                              double& credit) {
        double val = 0.0;
        for (Eigen::Index k = 0; k <= m; ++k)
            val += trapezoid_weight(k, m, dt) * dens[k] * util.value(path.c[k]);
        if (atom_k >= 0) val += util.value(path.X[atom_k]);
        if (path.absorbed_step >= 0) {
            const double t0 = static_cast<double>(path.absorbed_step) * dt;
            const bool income_on = t0 < path.tau;
            if (measure.income_cutoff(t0) > 0.0 || measure.density(t0) > 0.0) {
                credit = std::exp(-measure.delta() * t0) *
                         ensemble.control().value_at_floor(income_on);
                val += credit;
            }
        }
        return val;
    });
    return finish(ensemble, reduced);
}

EstimateResult estimate_dual(const PathEnsemble& ensemble, const DeflatorSpec& deflator,
                             const DiscountMeasure& measure, const MarketParams& params) {
    const PowerUtility util(params.p);
    const Eigen::Index m = ensemble.steps();
    const double dt = ensemble.config().dt;
    const double gamma = deflator.gamma;
    const double y = deflator.y;

    Eigen::ArrayXd dens(m + 1), zdisc(m + 1), egam(m + 1), cutoff(m + 1);
    for (Eigen::Index k = 0; k <= m; ++k) {
        const double t = static_cast<double>(k) * dt;
        dens[k] = measure.density(t);
        zdisc[k] = std::exp(-params.r * t) * measure.zeta(t);
        egam[k] = std::exp(-params.eta * gamma * t);
        cutoff[k] = measure.income_cutoff(t);
    }
    Eigen::Index atom_k = -1;
    if (measure.variant() == DiscountMeasure::Variant::FiniteConsumptionTerminalWealth &&
        measure.horizon() <= ensemble.config().t_max + 1e-12)
        atom_k = static_cast<Eigen::Index>(std::llround(measure.horizon() / dt));

    auto reduced = reduce_paths(ensemble, [&](Eigen::Index, const PathSample& path, double&) {
        const double eg_tau = std::exp(-params.eta * gamma * path.tau);
        double val = 0.0;
        for (Eigen::Index k = 0; k <= m; ++k) {
            if (dens[k] == 0.0) continue;
            const double t = static_cast<double>(k) * dt;
            const double g = t < path.tau ? egam[k] : eg_tau * (1.0 + gamma);
            const double zy = y * zdisc[k] * path.Z[k] * g;
            const double f = params.a * path.N[k] * cutoff[k];
            val += trapezoid_weight(k, m, dt) * dens[k] * (util.conjugate(zy) + f * zy);
        }
        if (atom_k >= 0) {
            const double T = measure.horizon();
            const double g = T < path.tau ? std::exp(-params.eta * gamma * T)
                                          : eg_tau * (1.0 + gamma);
            val += util.conjugate(y * std::exp(-params.r * T) * path.Z[atom_k] * g);
        }
        return val;
    });
    EstimateResult res = finish(ensemble, reduced);
    if (measure.variant() == DiscountMeasure::Variant::InfiniteHorizon) {
        res.analytic_tail = dual_tail(gamma, y, ensemble.config().t_max, params);
        res.value.mean += res.analytic_tail;
    }
    return res;
}

EstimateResult estimate_budget(const PathEnsemble& ensemble, const DeflatorSpec& deflator) {
    const MarketParams& mp = ensemble.params();
    const Eigen::Index m = ensemble.steps();
    const double dt = ensemble.config().dt;
    const double gamma = deflator.gamma;

    Eigen::ArrayXd rdisc(m + 1), egam(m + 1);
    for (Eigen::Index k = 0; k <= m; ++k) {
        const double t = static_cast<double>(k) * dt;
        rdisc[k] = std::exp(-mp.r * t);
        egam[k] = std::exp(-mp.eta * gamma * t);
    }

    auto reduced = reduce_paths(ensemble, [&](Eigen::Index, const PathSample& path, double&) {
        const double eg_tau = std::exp(-mp.eta * gamma * path.tau);
        const Eigen::Index stop = path.absorbed_step >= 0 ? path.absorbed_step : m;
        double val = 0.0;
        for (Eigen::Index k = 0; k <= stop; ++k) {
            const double t = static_cast<double>(k) * dt;
            const double g = t < path.tau ? egam[k] : eg_tau * (1.0 + gamma);
            const double Y = deflator.y * rdisc[k] * path.Z[k] * g;
            const double f = mp.a * path.N[k];
            val += trapezoid_weight(k, stop, dt) * (path.c[k] - f) * Y;
        }
        return val;
    });
    return finish(ensemble, reduced);
}

EstimateResult estimate_derivative_formula(const PathEnsemble& ensemble,
                                           const DiscountMeasure& measure) {
    const MarketParams& mp = ensemble.params();
    const Eigen::Index m = ensemble.steps();
    const double dt = ensemble.config().dt;

    Eigen::ArrayXd dens(m + 1);
    for (Eigen::Index k = 0; k <= m; ++k) dens[k] = measure.density(static_cast<double>(k) * dt);

    auto reduced = reduce_paths(ensemble, [&](Eigen::Index, const PathSample& path, double&) {
        const Eigen::Index stop = path.absorbed_step >= 0 ? path.absorbed_step : m;
        double val = 0.0;
        for (Eigen::Index k = 0; k <= stop; ++k) {
            const double c = path.c[k];
            if (c <= 0.0) continue;  // marginal utility undefined at zero consumption
            const double f = mp.a * path.N[k] * measure.income_cutoff(static_cast<double>(k) * dt);
            const double integrand = std::pow(c, mp.p) - std::pow(c, mp.p - 1.0) * f;
            val += trapezoid_weight(k, stop, dt) * dens[k] * integrand;
        }
        return val;
    });
    return finish(ensemble, reduced);
}

DeflatedCurves deflated_wealth_curves(const PathEnsemble& ensemble,
                                      const DeflatorSpec& deflator) {
    const MarketParams& mp = ensemble.params();
    const Eigen::Index m = ensemble.steps();
    const double dt = ensemble.config().dt;
    const double gamma = deflator.gamma;
    const auto recs = record_indices(m, ensemble.config().record_stride);
    const auto n_rec = static_cast<Eigen::Index>(recs.size());
    const Eigen::Index n_paths = ensemble.config().n_paths;

    Eigen::ArrayXd rdisc(m + 1), egam(m + 1);
    for (Eigen::Index k = 0; k <= m; ++k) {
        const double t = static_cast<double>(k) * dt;
        rdisc[k] = std::exp(-mp.r * t);
        egam[k] = std::exp(-mp.eta * gamma * t);
    }

    Eigen::MatrixXd xy_mat(n_rec, n_paths);
    Eigen::MatrixXd lam_mat(n_rec, n_paths);

    ensemble.for_each_path([&](Eigen::Index i, const PathSample& path) {
        const double eg_tau = std::exp(-mp.eta * gamma * path.tau);
        auto Y_at = [&](Eigen::Index k) {
            const double t = static_cast<double>(k) * dt;
            const double g = t < path.tau ? egam[k] : eg_tau * (1.0 + gamma);
            return deflator.y * rdisc[k] * path.Z[k] * g;
        };
        double acc = 0.0;
        double settled = 0.0;
        bool have_settled = false;
        Eigen::Index rec_i = 0;
        for (Eigen::Index k = 0; k <= m; ++k) {
            const double Y = Y_at(k);
            if (!have_settled && path.absorbed_step >= 0 && k == path.absorbed_step) {
                // settle with the overshoot so the stopped process keeps its mean
                settled = acc + (path.X[k] + path.deficit) * Y;
                have_settled = true;
            }
            if (rec_i < n_rec && recs[static_cast<std::size_t>(rec_i)] == k) {
                xy_mat(rec_i, i) = path.X[k] * Y;
                lam_mat(rec_i, i) = have_settled ? settled : path.X[k] * Y + acc;
                ++rec_i;
            }
            if (k < m && !have_settled) {
                const double f = mp.a * path.N[k];
                acc += dt * (path.c[k] - f) * Y;  // left-endpoint rule
            }
        }
    });

    DeflatedCurves out;
    out.times.resize(n_rec);
    out.xy.resize(static_cast<std::size_t>(n_rec));
    out.lambda.resize(static_cast<std::size_t>(n_rec));
    const bool anti = ensemble.config().antithetic;
    for (Eigen::Index j = 0; j < n_rec; ++j) {
        out.times[j] = static_cast<double>(recs[static_cast<std::size_t>(j)]) * dt;
        out.xy[static_cast<std::size_t>(j)] = mean_se(xy_mat.row(j).transpose().array(), anti);
        out.lambda[static_cast<std::size_t>(j)] =
            mean_se(lam_mat.row(j).transpose().array(), anti);
    }
    return out;
}

ConstantGammaDual constant_gamma_dual(double gamma, const MarketParams& params) {
    const auto d = derive_constants(params);
    const double lam2 = params.lambda * params.lambda;
    ConstantGammaDual out{};
    out.rho = d.q * (params.delta - params.r) - params.delta + 0.5 * d.q * (d.q - 1.0) * lam2;
    if (!(out.rho < 0.0)) throw WellPosednessError("dual objective diverges: rho >= 0");
    const double b = params.eta * (1.0 + d.q * gamma);
    const double jump = std::pow(1.0 + gamma, d.q);
    if (std::abs(b) < 1e-14) {
        out.C = -1.0 / out.rho + jump * params.eta / (out.rho * out.rho);
    } else if (b - out.rho <= 0.0) {
        out.C = kInf;
    } else {
        out.C = 1.0 / (b - out.rho) +
                (jump * params.eta / b) * (-1.0 / out.rho - 1.0 / (b - out.rho));
    }
    out.D = params.a / (params.r + params.eta * (1.0 + gamma));
    return out;
}

double ConstantGammaDual::value(double y, const MarketParams& params) const {
    const PowerUtility util(params.p);
    return C * util.conjugate(y) + D * y;
}

std::pair<double, double> ConstantGammaDual::min_plus_xy(double x,
                                                         const MarketParams& params) const {
    const double q = PowerUtility(params.p).q();
    if (!std::isfinite(C)) return {kInf, std::numeric_limits<double>::quiet_NaN()};
    const double y_hat = std::pow((D + x) / C, 1.0 / (q - 1.0));
    return {value(y_hat, params) + x * y_hat, y_hat};
}

double dual_tail(double gamma, double y, double t_max, const MarketParams& params) {
    const auto d = derive_constants(params);
    const double lam2 = params.lambda * params.lambda;
    const double rho = d.q * (params.delta - params.r) - params.delta +
                       0.5 * d.q * (d.q - 1.0) * lam2;
    if (!(rho < 0.0)) return kInf;
    const double b = params.eta * (1.0 + d.q * gamma);
    const double jump = std::pow(1.0 + gamma, d.q);
    const double T = t_max;
    double Ctail;
    if (std::abs(b) < 1e-14) {
        // E[Gamma^q](t) = 1 + jump eta t in this degenerate case
        Ctail = -std::exp(rho * T) / rho +
                jump * params.eta * std::exp(rho * T) * (1.0 / (rho * rho) - T / rho);
    } else if (b - rho <= 0.0) {
        return kInf;
    } else {
        Ctail = std::exp((rho - b) * T) / (b - rho) +
                (jump * params.eta / b) *
                    (-std::exp(rho * T) / rho - std::exp((rho - b) * T) / (b - rho));
    }
    const double income_rate = params.r + params.eta * (1.0 + gamma);
    const double income_tail = params.a * y * std::exp(-income_rate * T) / income_rate;
    const PowerUtility util(params.p);
    return Ctail * util.conjugate(y) + income_tail;
}

}  // namespace termincome
