#include "termincome/market.hpp"

#include <sstream>

namespace termincome {

DerivedConstants derive_constants(const MarketParams& params) {
    auto reject = [](const std::string& what) { throw ValidationError(what); };
    if (!(params.r > 0.0)) reject("interest rate r must be > 0");
    if (!(params.sigma > 0.0)) reject("volatility sigma must be > 0");
    if (!(params.delta > 0.0)) reject("impatience rate delta must be > 0");
    if (!(params.eta >= 0.0)) reject("termination intensity eta must be >= 0");
    if (!(params.a >= 0.0)) reject("income rate a must be >= 0");
    if (!(params.p > 0.0 && params.p < 1.0)) reject("utility exponent p must lie in (0,1)");

    const double q = -params.p / (1.0 - params.p);
    const double K =
        (params.delta - params.r * params.p + 0.5 * q * params.lambda * params.lambda) /
        (1.0 - params.p);
    if (!(K > 0.0)) {
        std::ostringstream os;
        os << "ill-posed problem: K = " << K << " <= 0";
        throw WellPosednessError(os.str());
    }
    return {q, K, params.eta + params.delta};
}

}  // namespace termincome
