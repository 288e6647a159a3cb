#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

namespace kmt {

// Serial is the reference path; Parallel must produce identical results.
enum class Exec { Serial, Parallel };

// out[i] = f(lo + i) for i in [0, hi - lo). Results are stored by index, so the
// parallel path is schedule independent. The exception thrown for the smallest index
// is rethrown after the loop.
template <class F>
auto map_range(Exec exec, long lo, long hi, F&& f) -> std::vector<std::invoke_result_t<F&, long>> {
  using R = std::invoke_result_t<F&, long>;
  const long count = hi > lo ? hi - lo : 0;
  std::vector<R> out(static_cast<std::size_t>(count));
  if (exec == Exec::Serial) {
    for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = f(lo + i);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(lo + i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void set_thread_count(int jobs);

}  // namespace kmt
