#ifndef LOSSLAB_GRID_HPP
#define LOSSLAB_GRID_HPP

#include <cstddef>
#include <vector>

namespace losslab {

// All formulas in this library live on (0, T0]. Evaluating a singular model
// speed below this floor is a domain error.
inline constexpr double kTimeFloor = 1e-12;

// Default resolution for grid-maximized suprema (class metrics, membership).
inline constexpr std::size_t kDefaultPointsPerDecade = 4096;

/// n points geometrically spaced on [t_lo, t_hi], endpoints included.
std::vector<double> log_grid(double t_lo, double t_hi, std::size_t n);

/// Geometric grid with a fixed number of points per decade.
std::vector<double> log_grid_per_decade(double t_lo, double t_hi,
                                        std::size_t per_decade);

/// n points uniformly spaced on [lo, hi], endpoints included.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

/// Sorted union of two sorted grids, duplicates removed.
std::vector<double> merge_grids(const std::vector<double>& a,
                                const std::vector<double>& b);

}  // namespace losslab

#endif
