#ifndef LOSSLAB_CUTOFF_HPP
#define LOSSLAB_CUTOFF_HPP

#include <array>

namespace losslab {

/// C-infinity cutoff: 0 for sigma <= 0, 1 for sigma >= 1, monotone on [0, 1].
/// Realized as f(s)/(f(s)+f(1-s)) with f(s)=exp(-1/s), so every derivative
/// vanishes at both ends. Sup norms of the first three derivatives are
/// computed once by dense scan and cached.
class CutoffFunction {
  public:
    CutoffFunction();

    double value(double sigma) const { return derivative(0, sigma); }

    /// m-th derivative, m in 0..3.
    double derivative(int m, double sigma) const;

    /// Cached sup norm of the m-th derivative on [0,1]; sup_norm(0) == 1.
    double sup_norm(int m) const { return km_[static_cast<std::size_t>(m)]; }

  private:
    std::array<double, 4> km_{};
};

}  // namespace losslab

#endif
