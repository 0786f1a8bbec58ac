#pragma once

// Test-side oracles, kept independent of the library's computation paths:
// the 2x2x2 table is built and collapsed by direct arithmetic here.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct Beta8 {
  double b0, bT, bX, bY, bTX, bTY, bXY, bTXY;
};

inline double cell(const Beta8& b, int t, int x, int y) {
  return std::exp(b.b0 + b.bT * t + b.bX * x + b.bY * y + b.bTX * t * x + b.bTY * t * y +
                  b.bXY * x * y + b.bTXY * t * x * y);
}

// Marginal odds ratio over the (t, y) margin by direct summation.
inline double or_ty(const Beta8& b) {
  double m[2][2] = {};
  for (int t = 0; t < 2; ++t) {
    for (int y = 0; y < 2; ++y) {
      m[t][y] = cell(b, t, 0, y) + cell(b, t, 1, y);
    }
  }
  return m[1][1] * m[0][0] / (m[1][0] * m[0][1]);
}

inline double or_xy(const Beta8& b) {
  double m[2][2] = {};
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      m[x][y] = cell(b, 0, x, y) + cell(b, 1, x, y);
    }
  }
  return m[1][1] * m[0][0] / (m[1][0] * m[0][1]);
}

// Kolmogorov distance between a sample and a reference CDF.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

// Exhaustive grid search of fn over a box, 41 points per axis.
struct GridResult {
  double lo, hi;
};

inline GridResult grid_extrema(const std::vector<std::pair<double, double>>& box,
                               const std::function<double(const std::vector<double>&)>& fn) {
  const int kPoints = 41;
  std::vector<double> point(box.size());
  GridResult out{1e300, -1e300};
  std::vector<int> idx(box.size(), 0);
  for (;;) {
    for (std::size_t k = 0; k < box.size(); ++k) {
      const auto [lo, hi] = box[k];
      point[k] = lo + (hi - lo) * idx[k] / (kPoints - 1);
    }
    const double v = fn(point);
    out.lo = std::min(out.lo, v);
    out.hi = std::max(out.hi, v);
    std::size_t k = 0;
    for (; k < box.size(); ++k) {
      if (++idx[k] < kPoints) break;
      idx[k] = 0;
    }
    if (k == box.size()) break;
  }
  return out;
}

}  // namespace oracle
