#pragma once

#include "nearfocus/geometry.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace nearfocus {

/// C(x) = ∫₀ˣ cos(πt²/2) dt,  S(x) = ∫₀ˣ sin(πt²/2) dt
template <typename T>
struct FresnelPair {
  T c;
  T s;
};

namespace detail {

/// Below this |x| the power series is used, above it the continued fraction.
inline constexpr double kFresnelCrossover = 1.8;

// Σ_k (πx²/2)^k x / (k! (2k+1)), with the even k feeding C and odd k feeding S,
// signs alternating in pairs.
template <typename T>
FresnelPair<T> fresnel_series(T x) {
  const T eps = std::numeric_limits<T>::epsilon();
  const T t = std::numbers::pi_v<T> / T(2) * x * x;
  T term = x;
  T c = 0;
  T s = 0;
  for (int k = 0; k < 200; ++k) {
    const T contrib = term / T(2 * k + 1);
    switch (k % 4) {
      case 0: c += contrib; break;
      case 1: s += contrib; break;
      case 2: c -= contrib; break;
      default: s -= contrib; break;
    }
    if (std::abs(contrib) <= eps * (std::abs(c) + std::abs(s)) * T(0.5)) break;
    term *= t / T(k + 1);
  }
  return {c, s};
}

// Modified Lentz evaluation of the erfc continued fraction behind
// C + iS = (1+i)/2 [1 - e^{iπx²/2} (x - ix) h(x)], valid for x > 0 away from the origin.
template <typename T>
FresnelPair<T> fresnel_continued_fraction(T x) {
  using Complex = std::complex<T>;
  const T eps = std::numeric_limits<T>::epsilon();
  const T tiny = std::numeric_limits<T>::min() / eps;
  const T pix2 = std::numbers::pi_v<T> * x * x;

  Complex b(1, -pix2);
  Complex cc(T(1) / tiny, 0);
  Complex d = T(1) / b;
  Complex h = d;
  T n = -1;
  for (int k = 2; k < 1000; ++k) {
    n += 2;
    const T a = -n * (n + 1);
    b += T(4);
    d = T(1) / (a * d + b);
    cc = b + a / cc;
    const Complex del = cc * d;
    h *= del;
    if (std::abs(del.real() - T(1)) + std::abs(del.imag()) < eps) break;
  }
  h *= Complex(x, -x);
  const T half_phase = T(0.5) * pix2;
  const Complex cs =
      Complex(T(0.5), T(0.5)) * (T(1) - Complex(std::cos(half_phase), std::sin(half_phase)) * h);
  return {cs.real(), cs.imag()};
}

}  // namespace detail

template <typename T>
FresnelPair<T> fresnel_cs(T x) {
  if (!std::isfinite(static_cast<double>(x))) {
    throw DomainError("fresnel_cs: argument must be finite");
  }
  const T ax = std::abs(x);
  FresnelPair<T> r = ax < T(detail::kFresnelCrossover) ? detail::fresnel_series(ax)
                                                        : detail::fresnel_continued_fraction(ax);
  if (x < T(0)) {
    r.c = -r.c;
    r.s = -r.s;
  }
  return r;
}

/// (C²(γ) + S²(γ)) / γ², the normalized gain of a uniformly illuminated line
/// aperture under a quadratic phase error; equals 1 at γ = 0.
template <typename T>
T fresnel_line_gain(T gamma) {
  if (gamma == T(0)) return T(1);
  const auto [c, s] = fresnel_cs(gamma);
  return (c * c + s * s) / (gamma * gamma);
}

}  // namespace nearfocus
