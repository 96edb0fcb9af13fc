#include "ctst/scheduler.hpp"

#include <stdexcept>

namespace ctst {

RateLimiter::RateLimiter(double requests_per_second) : next_(std::chrono::steady_clock::now()) {
  if (!(requests_per_second > 0)) throw std::invalid_argument("rate limit must be positive");
  interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / requests_per_second));
}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

ConcurrencyGate::ConcurrencyGate(std::size_t limit) : limit_(limit) {
  if (limit_ == 0) throw std::invalid_argument("concurrency limit must be at least 1");
}

void ConcurrencyGate::enter() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
  std::size_t seen = max_observed_.load();
  while (in_flight_ > seen && !max_observed_.compare_exchange_weak(seen, in_flight_)) {
  }
}

void ConcurrencyGate::leave() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_one();
}

}  // namespace ctst
