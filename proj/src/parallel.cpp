#include "embalance/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace embalance {

int thread_count() {
  if (const char* env = std::getenv("EMBALANCE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  const int hw = omp_get_num_procs();
  return hw > 0 ? hw : 1;
}

void for_each_member(std::size_t count, const std::function<void(std::size_t)>& body,
                     Execution exec) {
  std::vector<std::exception_ptr> errors(count);
  if (exec == Execution::serial || count < 2) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
  }
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace embalance
