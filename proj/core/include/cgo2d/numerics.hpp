#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace cgo2d {

using Complex = std::complex<double>;

struct Vec2 {
  double x1 = 0.0, x2 = 0.0;
};

inline Complex to_complex(const Vec2& p) { return Complex(p.x1, p.x2); }

// log-log least-squares slope of err vs h (or err vs 1/tau): err ~ C * x^p.
// Returns the fitted exponent p; pairs with err<=0 are skipped.
double fit_order(const std::vector<double>& x, const std::vector<double>& err);

// Median of pairwise slopes (Theil-Sen). Robust trend estimate for short sweeps.
double theil_sen_slope(const std::vector<double>& x, const std::vector<double>& y);

// Quintic smoothstep: 0 for s<=0, 1 for s>=1, C^2 join.
double smoothstep5(double s);

// Integer power by repeated multiplication (exact-ish for small exponents).
Complex ipow(Complex z, long long n);

// FNV-1a over a byte span, used for mesh/operator identity tokens.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace cgo2d
