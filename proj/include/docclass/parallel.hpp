#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace docclass {

// Applies fn to every index in [0, n) using at most `workers` threads.
// Results land in input order; the lowest-index exception wins so reruns
// fail the same way.
template <typename Out, typename Fn>
std::vector<Out> parallel_map_ordered(std::size_t n, unsigned workers, Fn fn) {
  std::vector<Out> results(n);
  if (n == 0) return results;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));

  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          results[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  for (std::size_t i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
  return results;
}

}  // namespace docclass
