#include "mmtc/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>

namespace mmtc {

namespace {
std::atomic<long> g_clamps{0};
std::mutex g_mu;
double g_largest = 0.0;
}  // namespace

double clamp_probability(double p, const char* context) {
  if (std::isnan(p)) throw NumericError(std::string(context) + ": probability is NaN");
  double excess = 0.0;
  if (p < 0.0) excess = -p;
  if (p > 1.0) excess = p - 1.0;
  if (excess == 0.0) return p;
  if (excess > 1e-6) throw NumericError(std::string(context) + ": probability outside [0, 1]", excess);
  ++g_clamps;
  {
    std::lock_guard lock(g_mu);
    g_largest = std::max(g_largest, excess);
  }
  return std::clamp(p, 0.0, 1.0);
}

ClampStats clamp_stats() {
  std::lock_guard lock(g_mu);
  return {g_clamps.load(), g_largest};
}

}  // namespace mmtc
