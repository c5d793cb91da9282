#include "losslab/rate_function.hpp"

#include <cmath>
#include <stdexcept>

namespace losslab {

RateFunction RateFunction::constant(double value) {
    // Zero is admitted for the degenerate psi == 0 case (empty hyperbolic
    // zone); the class envelopes proper use strictly positive rates.
    if (!(value >= 0.0)) {
        throw std::invalid_argument("RateFunction: constant must be nonnegative");
    }
    return {Kind::Constant, value};
}

RateFunction RateFunction::log() { return {Kind::Log, 1.0}; }

RateFunction RateFunction::log_power(double p) {
    if (!(p > 0.0)) {
        throw std::invalid_argument("RateFunction: power must be positive");
    }
    return {Kind::LogPower, p};
}

double RateFunction::operator()(double t) const {
    switch (kind_) {
        case Kind::Constant:
            return param_;
        case Kind::Log:
            return std::abs(std::log(t));
        case Kind::LogPower:
            return std::pow(std::abs(std::log(t)), param_);
    }
    return param_;
}

std::string RateFunction::name() const {
    switch (kind_) {
        case Kind::Constant: return "constant";
        case Kind::Log: return "log";
        case Kind::LogPower: return "log-power";
    }
    return "?";
}

RateFunction RateFunction::parse(const std::string& name, double param) {
    if (name == "constant") return constant(param);
    if (name == "log") return log();
    if (name == "log-power") return log_power(param);
    throw std::invalid_argument("RateFunction: unknown catalog entry '" + name +
                                "' (expected constant|log|log-power)");
}

}  // namespace losslab
