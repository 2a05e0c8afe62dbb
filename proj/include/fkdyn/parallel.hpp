#pragma once

#include <exception>
#include <type_traits>
#include <vector>

#include <omp.h>

namespace fk {

// Runs fn(i) for i in [0, count) and returns the results in index order, so
// any reduction over the vector is independent of scheduling. threads <= 1
// is the serial reference path.
template <class F>
auto map_replicas(std::size_t count, int threads, F&& fn) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using T = std::invoke_result_t<F&, std::size_t>;
  std::vector<T> out(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr error;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(fk_map_replicas_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace fk
