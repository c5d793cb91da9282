#ifndef LOSSLAB_RATE_FUNCTION_HPP
#define LOSSLAB_RATE_FUNCTION_HPP

#include <string>

namespace losslab {

/// Growth-rate envelopes omega/psi, restricted to a named catalog so that
/// experiment configs stay reproducible from plain data. All entries are
/// positive and nonincreasing on (0, 1).
class RateFunction {
  public:
    enum class Kind { Constant, Log, LogPower };

    static RateFunction constant(double value);
    static RateFunction log();                // |log t|
    static RateFunction log_power(double p);  // |log t|^p

    double operator()(double t) const;
    Kind kind() const { return kind_; }
    double param() const { return param_; }
    std::string name() const;

    static RateFunction parse(const std::string& name, double param);

  private:
    RateFunction(Kind k, double p) : kind_(k), param_(p) {}
    Kind kind_;
    double param_;
};

}  // namespace losslab

#endif
