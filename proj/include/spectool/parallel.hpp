#pragma once

#include <cstddef>
#include <exception>

namespace spectool {

/// Runs body(i) for i in [0, n) on the OpenMP team, one index per chunk.
/// If iterations throw, one of the exceptions is rethrown on the calling
/// thread once the loop has finished.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(spectool_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace spectool
