#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace lcsim {

// Mean / standard error accumulator. Chunked Monte-Carlo loops keep one per
// chunk and merge in fixed chunk order, so totals do not depend on the
// thread count.
struct RunningSums {
  double s = 0.0, ss = 0.0;
  int64_t n = 0;

  void add(double x) {
    s += x;
    ss += x * x;
    ++n;
  }
  void merge(const RunningSums& o) {
    s += o.s;
    ss += o.ss;
    n += o.n;
  }
  double mean() const { return n > 0 ? s / static_cast<double>(n) : 0.0; }
  double stderror() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var =
        std::max(0.0, (ss - static_cast<double>(n) * m * m) /
                          static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

inline double z_score(const RunningSums& r) {
  const double se = r.stderror();
  if (se > 0.0) return r.mean() / se;
  if (r.mean() == 0.0) return 0.0;
  return r.mean() > 0.0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
}

}  // namespace lcsim
