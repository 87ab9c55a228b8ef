#pragma once

#include <functional>
#include <optional>

namespace siph {

struct BracketOptions {
  double lo = 1e-8;
  double hi = 1.0;
  /// Upper end doubles until it straddles the target or reaches this cap.
  double upper_cap = 0x1p60;
  /// Lower end halves at most this many times.
  int max_halvings = 60;
  int max_iterations = 400;
};

struct RootResult {
  std::optional<double> t;
  double residual = 0.0;
  bool bracket_exhausted = false;
  /// Bracket reached when the search stopped (useful as failure evidence).
  double lo = 0.0;
  double hi = 0.0;
};

/// Solves g(t) = target for t > 0, g strictly monotone in the given
/// orientation (+1 increasing, -1 decreasing). Bisects down to adjacent
/// doubles.
RootResult solve_monotone(const std::function<double(double)>& g, double target, int orientation,
                          const BracketOptions& opts = {});

/// Sign changes of g - target on a uniform subdivision of [lo, hi].
int count_sign_changes(const std::function<double(double)>& g, double target, double lo, double hi,
                       int subdivisions = 64);

}  // namespace siph
