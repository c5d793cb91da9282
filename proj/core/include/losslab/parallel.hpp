#ifndef LOSSLAB_PARALLEL_HPP
#define LOSSLAB_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace losslab {

/// Run fn(0..n-1) on up to `workers` threads. Items must be independent;
/// the first exception thrown by any item is rethrown after all join.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace losslab

#endif
