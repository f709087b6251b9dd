#pragma once

// Branch-free exp/sigmoid/tanh that the compiler can vectorize over
// contiguous arrays. exp_vec agrees with std::exp to a few ulp on the
// clamped range [-708, 708].

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

namespace odesurro::activation {

// a * b + c, fused when the target has FMA. Results then differ in the
// last bits between FMA and non-FMA builds, never within one build.
inline double madd(double a, double b, double c) {
#if defined(__FMA__)
  return std::fma(a, b, c);
#else
  return a * b + c;
#endif
}

inline double exp_vec(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShift = 0x1.8p52;
  x = std::max(-708.0, std::min(x, 708.0));
  const double kd = x * kLog2e + kShift;
  const double k = kd - kShift;
  const double r = (x - k * kLn2Hi) - k * kLn2Lo;
  // Taylor series to r^13 / 13!; |r| <= ln2/2 keeps truncation below 1e-17.
  double p = 1.0 / 6227020800.0;
  p = madd(p, r, 1.0 / 479001600.0);
  p = madd(p, r, 1.0 / 39916800.0);
  p = madd(p, r, 1.0 / 3628800.0);
  p = madd(p, r, 1.0 / 362880.0);
  p = madd(p, r, 1.0 / 40320.0);
  p = madd(p, r, 1.0 / 5040.0);
  p = madd(p, r, 1.0 / 720.0);
  p = madd(p, r, 1.0 / 120.0);
  p = madd(p, r, 1.0 / 24.0);
  p = madd(p, r, 1.0 / 6.0);
  p = madd(p, r, 0.5);
  p = madd(p, r, 1.0);
  p = madd(p, r, 1.0);
  const std::int64_t ki = std::bit_cast<std::int64_t>(kd) - std::bit_cast<std::int64_t>(kShift);
  const double scale = std::bit_cast<double>((ki + 1023) << 52);
  return p * scale;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + exp_vec(-z)); }

inline double tanh(double z) { return 2.0 / (1.0 + exp_vec(-2.0 * z)) - 1.0; }

inline void sigmoid_inplace(std::span<double> v) {
  double* p = v.data();
  const std::size_t n = v.size();
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) p[k] = 1.0 / (1.0 + exp_vec(-p[k]));
}

inline void tanh_inplace(std::span<double> v) {
  double* p = v.data();
  const std::size_t n = v.size();
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) p[k] = 2.0 / (1.0 + exp_vec(-2.0 * p[k])) - 1.0;
}

}  // namespace odesurro::activation
