#pragma once

// Small least-squares helpers for the trend fits.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "advdiff/core_types.hpp"

namespace advdiff {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

/// Ordinary least squares y = slope x + intercept. r^2 is 1 when the data
/// have no spread in y.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit_line: size mismatch");
  if (x.size() < 2) throw DomainError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw DomainError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return f;
}

struct ExpPoint {
  double inv_epsilon;
  double log_cost;
};

struct ExpFit {
  std::vector<ExpPoint> points;
  double slope = 0.0;  // -k for decay, +k for blow-up
  double intercept = 0.0;
  double r_squared = 1.0;
};

/// Least squares of log cost on 1/eps.
inline ExpFit fit_exponential(const std::vector<ExpPoint>& points) {
  if (points.size() < 3) throw DomainError("fit_exponential: need at least three points");
  std::vector<double> x, y;
  for (const auto& pt : points) {
    if (!std::isfinite(pt.inv_epsilon) || !std::isfinite(pt.log_cost))
      throw DomainError("fit_exponential: non-finite point");
    x.push_back(pt.inv_epsilon);
    y.push_back(pt.log_cost);
  }
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DomainError("fit_exponential: epsilons must be distinct");
  const LineFit lf = fit_line(x, y);
  return ExpFit{points, lf.slope, lf.intercept, lf.r_squared};
}

}  // namespace advdiff
