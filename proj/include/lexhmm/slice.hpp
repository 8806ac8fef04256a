#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "lexhmm/rng.hpp"

namespace lexhmm {

// Univariate slice sampler with stepping-out and shrinkage (Neal 2003),
// restricted to the open interval (lo, hi).
inline double slice_sample(double x0, const std::function<double(double)>& log_f, double lo,
                           double hi, double step, Rng& rng, int max_step_out = 32) {
  const double ly = log_f(x0) + std::log(rng.uniform() + 1e-300);
  double left = x0 - step * rng.uniform();
  double right = left + step;
  if (left < lo) left = lo;
  if (right > hi) right = hi;
  for (int i = 0; i < max_step_out && left > lo && log_f(left) > ly; ++i) {
    left -= step;
    if (left < lo) left = lo;
  }
  for (int i = 0; i < max_step_out && right < hi && log_f(right) > ly; ++i) {
    right += step;
    if (right > hi) right = hi;
  }
  for (int i = 0; i < 128; ++i) {
    const double x = left + rng.uniform() * (right - left);
    if (log_f(x) > ly) return x;
    if (x < x0) {
      left = x;
    } else {
      right = x;
    }
  }
  return x0;  // shrinkage collapsed; keep the current value
}

}  // namespace lexhmm
