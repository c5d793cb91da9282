#include "losslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace losslab {

std::vector<double> log_grid(double t_lo, double t_hi, std::size_t n) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo)) {
        throw std::invalid_argument("log_grid: need 0 < t_lo < t_hi");
    }
    if (n < 2) throw std::invalid_argument("log_grid: need n >= 2");
    std::vector<double> g(n);
    const double llo = std::log(t_lo);
    const double lhi = std::log(t_hi);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = std::exp(llo + s * (lhi - llo));
    }
    g.front() = t_lo;
    g.back() = t_hi;
    return g;
}

std::vector<double> log_grid_per_decade(double t_lo, double t_hi,
                                        std::size_t per_decade) {
    const double decades = std::log10(t_hi / t_lo);
    const auto n = static_cast<std::size_t>(
        std::ceil(decades * static_cast<double>(per_decade)));
    return log_grid(t_lo, t_hi, std::max<std::size_t>(n, 2));
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    if (!(hi > lo)) throw std::invalid_argument("linear_grid: need lo < hi");
    if (n < 2) throw std::invalid_argument("linear_grid: need n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = lo + s * (hi - lo);
    }
    g.back() = hi;
    return g;
}

std::vector<double> merge_grids(const std::vector<double>& a,
                                const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace losslab
