#include "regretforge/numerics.hpp"

#include <cmath>
#include <string>

#include "regretforge/errors.hpp"

namespace regretforge {

std::atomic<uint64_t>& log_floor_count() {
  static std::atomic<uint64_t> count{0};
  return count;
}

double safe_log(double x) {
  if (x < 0.0)
    throw NumericDomainError("log of negative value " + std::to_string(x));
  if (x < kLogFloor) {
    log_floor_count().fetch_add(1, std::memory_order_relaxed);
    return std::log(kLogFloor);
  }
  return std::log(x);
}

}  // namespace regretforge
