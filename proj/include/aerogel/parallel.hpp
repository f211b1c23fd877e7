#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <new>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace aerogel {

//! Raised when an indexed batch stops early; reports how many indices
//! finished before the failure.
class BatchFailure : public std::runtime_error {
public:
  BatchFailure(const std::string &what, std::size_t completed)
      : std::runtime_error(what + " (completed " + std::to_string(completed) +
                           " items)"),
        completed_(completed) {}
  std::size_t completed() const noexcept { return completed_; }

private:
  std::size_t completed_;
};

//! Worker count from AEROGEL_LDT_WORKERS, or 1.
inline unsigned workers_from_env() {
  if (const char *s = std::getenv("AEROGEL_LDT_WORKERS")) {
    char *end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v > 0)
      return static_cast<unsigned>(v);
  }
  return 1;
}

//! Calls fn(i) for every i in [0, count). Each index is handled exactly once;
//! callers write results into slot i so output order never depends on the
//! number of workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn &&fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    std::size_t done = 0;
    try {
      for (std::size_t i = 0; i < count; ++i, ++done)
        fn(i);
    } catch (const std::bad_alloc &) {
      throw BatchFailure("out of memory", done);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      if (stop.load(std::memory_order_relaxed))
        return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count)
        return;
      try {
        fn(i);
        done.fetch_add(1, std::memory_order_relaxed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        stop = true;
        return;
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    const unsigned n = static_cast<unsigned>(
        std::min<std::size_t>(workers, count));
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w)
      pool.emplace_back(worker);
  }

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const std::bad_alloc &) {
      throw BatchFailure("out of memory", done.load());
    }
  }
}

} // namespace aerogel
