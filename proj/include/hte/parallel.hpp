#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace hte {

// Worker-count knob passed to every parallel kernel. workers <= 1 runs the
// plain serial loop, which is the reference path the tests compare against.
struct ExecPolicy {
  int workers = 1;

  static ExecPolicy serial() { return ExecPolicy{1}; }
  bool is_serial() const { return workers <= 1; }
};

// Runs body(i) for i in [0, n). Each index must write only to its own output
// slot; reductions happen afterwards in index order, so results do not depend
// on the worker count. The exception from the lowest failing index is
// rethrown after the loop.
template <class Body>
void parallel_for(std::size_t n, ExecPolicy exec, Body&& body) {
  if (exec.is_serial() || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::size_t first_index = n;
  std::mutex guard;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(exec.workers)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hte
