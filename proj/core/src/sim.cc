#include "fbcrs/sim.h"

#include <cmath>

#include "fbcrs/error.h"

namespace fbcrs::sim {

double normal_quantile_two_sided(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InputError("confidence must lie in (0, 1)");
  }
  // P(|Z| <= z) = erf(z / sqrt(2)) is increasing; bisect.
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erf(mid / std::sqrt(2.0)) < confidence) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t count,
                         double confidence) {
  if (count == 0 || successes > count) {
    throw InputError("wilson_interval requires 0 <= successes <= count, count >= 1");
  }
  static const double kDefaultZ = normal_quantile_two_sided(kDefaultConfidence);
  const double z =
      confidence == kDefaultConfidence ? kDefaultZ : normal_quantile_two_sided(confidence);
  const double n = static_cast<double>(count);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double spread =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  Interval out{center - spread, center + spread};
  // The closed form is exact at the boundaries; clamp away rounding only.
  if (successes == 0) out.low = 0.0;
  if (successes == count) out.high = 1.0;
  out.low = std::max(0.0, std::min(out.low, p));
  out.high = std::min(1.0, std::max(out.high, p));
  return out;
}

Interval RateEstimate::interval(double confidence) const {
  if (count == 0) return Interval{0.0, 1.0};
  return wilson_interval(successes, count, confidence);
}

double MeanEstimate::half_width(double confidence) const {
  if (count < 2) return 1.0;
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return normal_quantile_two_sided(confidence) * std::sqrt(var / n);
}

}  // namespace fbcrs::sim
