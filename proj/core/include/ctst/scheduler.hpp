#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace ctst {

// Spaces request starts at least 1/rate seconds apart.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
  std::mutex mutex_;
};

// Bounds the number of concurrently running sections.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(std::size_t limit);

  class Permit {
   public:
    explicit Permit(ConcurrencyGate& gate) : gate_(&gate) { gate_->enter(); }
    ~Permit() { gate_->leave(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    ConcurrencyGate* gate_;
  };

  std::size_t limit() const noexcept { return limit_; }
  std::size_t max_observed() const noexcept { return max_observed_.load(); }

 private:
  void enter();
  void leave();

  std::size_t limit_;
  std::size_t in_flight_ = 0;
  std::atomic<std::size_t> max_observed_{0};
  std::mutex mutex_;
  std::condition_variable cv_;
};

// Runs fn(i) for i in [0, n) on at most `max_parallel` worker threads and
// returns results in index order, independent of completion order. The first
// exception (lowest index) is rethrown after all workers join.
template <class F>
auto parallel_map(std::size_t n, std::size_t max_parallel, F&& fn) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::min(n, std::max<std::size_t>(1, max_parallel));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace ctst
