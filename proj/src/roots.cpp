#include "siph/roots.hpp"

#include <cmath>

namespace siph {

RootResult solve_monotone(const std::function<double(double)>& g, double target, int orientation,
                          const BracketOptions& opts) {
  const double s = orientation >= 0 ? 1.0 : -1.0;
  auto h = [&](double t) { return s * (g(t) - target); };

  RootResult out;
  double lo = opts.lo;
  double hi = opts.hi;
  double h_hi = h(hi);
  while (h_hi < 0.0 && hi < opts.upper_cap) {
    lo = hi;
    hi *= 2.0;
    h_hi = h(hi);
  }
  double h_lo = h(lo);
  for (int k = 0; h_lo > 0.0 && k < opts.max_halvings; ++k) {
    hi = lo;
    h_hi = h_lo;
    lo *= 0.5;
    h_lo = h(lo);
  }
  out.lo = lo;
  out.hi = hi;
  if (!std::isfinite(h_lo) || !std::isfinite(h_hi)) {
    out.bracket_exhausted = true;
    return out;
  }
  if (h_lo == 0.0) {
    out.t = lo;
    return out;
  }
  if (h_hi == 0.0) {
    out.t = hi;
    return out;
  }
  if (h_lo > 0.0 || h_hi < 0.0) {
    out.bracket_exhausted = true;
    out.residual = std::fabs(h_hi) < std::fabs(h_lo) ? h_hi : h_lo;
    return out;
  }

  for (int it = 0; it < opts.max_iterations; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double hm = h(mid);
    if (!std::isfinite(hm)) {
      out.bracket_exhausted = true;
      return out;
    }
    if (hm == 0.0) {
      lo = hi = mid;
      h_lo = h_hi = 0.0;
      break;
    }
    if (hm < 0.0) {
      lo = mid;
      h_lo = hm;
    } else {
      hi = mid;
      h_hi = hm;
    }
  }
  out.lo = lo;
  out.hi = hi;
  if (std::fabs(h_lo) <= std::fabs(h_hi)) {
    out.t = lo;
    out.residual = s * h_lo;
  } else {
    out.t = hi;
    out.residual = s * h_hi;
  }
  return out;
}

int count_sign_changes(const std::function<double(double)>& g, double target, double lo, double hi,
                       int subdivisions) {
  int changes = 0;
  double prev = g(lo) - target;
  for (int i = 1; i <= subdivisions; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / subdivisions;
    const double cur = g(t) - target;
    if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) ++changes;
    if (cur != 0.0) prev = cur;
  }
  return changes;
}

}  // namespace siph
