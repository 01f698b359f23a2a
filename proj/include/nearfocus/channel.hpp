#pragma once

#include "nearfocus/fresnel.hpp"
#include "nearfocus/geometry.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>

namespace nearfocus {

template <typename T>
using CVectorX = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;

using CVector = CVectorX<double>;

enum class DistanceModel {
  exact,                ///< Pythagorean element-to-point distance
  expanded,             ///< second-order near-field expansion, n1·n2 cross term dropped
  expanded_with_cross,  ///< second-order expansion including the cross term
};

namespace detail {

template <typename T>
void check_offset(T n, T half_span, const char* axis) {
  // offsets live on a grid spaced by 1; allow rounding slack only
  if (!(std::abs(n) <= half_span + T(1e-9))) {
    throw DomainError(std::string("element offset along ") + axis + " outside the array");
  }
}

/// r^(n1,n2) - r for element offsets (n1, n2), in meters.
template <typename T>
T path_difference(const UraConfig<T>& cfg, const DirectionalQuantities<T>& q, T range, T n1,
                  T n2, DistanceModel model) {
  const T d = cfg.spacing();
  const T y = n1 * d;
  const T z = n2 * d;
  if (model == DistanceModel::exact) {
    // (r u_y - y)² + (r u_z - z)² + (r u_x)² - r² expanded to avoid cancellation
    const T q2 = y * y + z * z - T(2) * range * (y * q.uy + z * q.uz);
    return q2 / (std::sqrt(range * range + q2) + range);
  }
  T diff = -y * q.uy - z * q.uz + (y * y * q.beta1 + z * z * q.beta2) / (T(2) * range);
  if (model == DistanceModel::expanded_with_cross) diff -= y * z * q.uy * q.uz / range;
  return diff;
}

}  // namespace detail

/// Distance from element (n1, n2) to p, exact Pythagorean form.
template <typename T>
T element_distance_exact(const UraConfig<T>& cfg, const SphericalPoint<T>& p, T n1, T n2) {
  detail::check_offset(n1, cfg.half_span1(), "y");
  detail::check_offset(n2, cfg.half_span2(), "z");
  const auto q = directional_quantities(p);
  const T r = p.range();
  const T dy = r * q.uy - n1 * cfg.spacing();
  const T dz = r * q.uz - n2 * cfg.spacing();
  const T dx = r * q.ux;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Distance from element (n1, n2) to p under the near-field expansion.
/// The n1·n2 cross term is dropped unless requested.
template <typename T>
T element_distance_expanded(const UraConfig<T>& cfg, const SphericalPoint<T>& p, T n1, T n2,
                            bool include_cross_term = false) {
  detail::check_offset(n1, cfg.half_span1(), "y");
  detail::check_offset(n2, cfg.half_span2(), "z");
  const auto model =
      include_cross_term ? DistanceModel::expanded_with_cross : DistanceModel::expanded;
  return p.range() +
         detail::path_difference(cfg, directional_quantities(p), p.range(), n1, n2, model);
}

/**
 * Near-field steering vector b(φ, θ, r), entries exp(-jν(r^(n1,n2) - r)) / √N_BS,
 * laid out row-major over (n1, n2). This is also the conjugate-phase
 * beamformer focused at p.
 */
template <typename T>
CVectorX<T> steering_vector(const UraConfig<T>& cfg, const SphericalPoint<T>& p,
                            DistanceModel model = DistanceModel::expanded) {
  const auto q = directional_quantities(p);
  const VectorX<T> o1 = cfg.offsets1();
  const VectorX<T> o2 = cfg.offsets2();
  const T nu = cfg.wavenumber();
  const T amp = T(1) / std::sqrt(T(cfg.size()));
  CVectorX<T> b(cfg.size());
  for (int k1 = 0; k1 < cfg.n1(); ++k1) {
    for (int k2 = 0; k2 < cfg.n2(); ++k2) {
      const T diff = detail::path_difference(cfg, q, p.range(), o1[k1], o2[k2], model);
      b[cfg.flat_index(k1, k2)] = std::polar(amp, -nu * diff);
    }
  }
  return b;
}

/// Planar-wave vector exp(jν(n1 d u_y + n2 d u_z)) / √N_BS for directional cosines (u_y, u_z).
template <typename T>
CVectorX<T> planar_steering_vector(const UraConfig<T>& cfg, T uy, T uz) {
  const VectorX<T> o1 = cfg.offsets1();
  const VectorX<T> o2 = cfg.offsets2();
  const T kd = cfg.wavenumber() * cfg.spacing();
  const T amp = T(1) / std::sqrt(T(cfg.size()));
  CVectorX<T> b(cfg.size());
  for (int k1 = 0; k1 < cfg.n1(); ++k1) {
    for (int k2 = 0; k2 < cfg.n2(); ++k2) {
      b[cfg.flat_index(k1, k2)] = std::polar(amp, kd * (o1[k1] * uy + o2[k2] * uz));
    }
  }
  return b;
}

/// Infinite-range limit of steering_vector.
template <typename T>
CVectorX<T> far_field_steering_vector(const UraConfig<T>& cfg, const Direction<T>& dir) {
  const auto q = directional_quantities(dir);
  return planar_steering_vector(cfg, q.uy, q.uz);
}

template <typename T>
struct PathSpec {
  std::complex<T> gain{1};
  SphericalPoint<T> point;
};

/// h = √(N_BS/L) Σ_l g_l e^{-jν r_l} b(φ_l, θ_l, r_l), paths indexed 1..L.
template <typename T>
CVectorX<T> los_channel(const UraConfig<T>& cfg, std::span<const PathSpec<T>> paths,
                        DistanceModel model = DistanceModel::expanded) {
  if (paths.empty()) throw DomainError("los_channel: at least one path is required");
  CVectorX<T> h = CVectorX<T>::Zero(cfg.size());
  const T nu = cfg.wavenumber();
  for (const auto& path : paths) {
    const std::complex<T> coeff = path.gain * std::polar(T(1), -nu * path.point.range());
    h += coeff * steering_vector(cfg, path.point, model);
  }
  h *= std::sqrt(T(cfg.size()) / T(paths.size()));
  return h;
}

/**
 * |w^H b(φ, θ, z)|² with w the conjugate-phase beamformer focused at `focus`
 * and b evaluated at the same angles and range z, by direct summation.
 * The default model reproduces the quadratic-phase gain; DistanceModel::exact
 * builds both vectors from exact distances for validation.
 */
template <typename T>
T array_gain_exact(const UraConfig<T>& cfg, const SphericalPoint<T>& focus, T eval_range,
                   DistanceModel model = DistanceModel::expanded) {
  const CVectorX<T> w = steering_vector(cfg, focus, model);
  const CVectorX<T> b =
      steering_vector(cfg, SphericalPoint<T>(focus.direction(), eval_range), model);
  return std::norm(w.dot(b));
}

/// |1/z - 1/r_f|, written symmetrically in (z, r_f).
template <typename T>
T effective_distance(T r_f, T z) {
  return std::abs(z - r_f) / (z * r_f);
}

/// Fresnel-integral approximation of the array gain,
/// [C²(γ₁)+S²(γ₁)][C²(γ₂)+S²(γ₂)] / (γ₁γ₂)².
template <typename T>
T array_gain_fresnel(const UraConfig<T>& cfg, const Direction<T>& dir, T r_f, T z) {
  if (!(r_f > T(0)) || !(z > T(0))) {
    throw DomainError("array_gain_fresnel: ranges must be positive");
  }
  const auto q = directional_quantities(dir);
  const T z_eff = effective_distance(r_f, z);
  const T d2 = cfg.spacing() * cfg.spacing();
  const T scale = d2 * z_eff / (T(2) * cfg.wavelength());
  const T n1 = T(cfg.n1());
  const T n2 = T(cfg.n2());
  const T gamma1 = std::sqrt(n1 * n1 * q.beta1 * scale);
  const T gamma2 = std::sqrt(n2 * n2 * q.beta2 * scale);
  return fresnel_line_gain(gamma1) * fresnel_line_gain(gamma2);
}

/// Crossings of the half-power level on either side of the focus; nullopt when
/// the gain stays above 0.5 to the end of the scanned interval.
struct HalfPowerWindow {
  std::optional<double> lower_m;
  std::optional<double> upper_m;
};

/**
 * Scans array_gain_exact over `points` log-spaced ranges in [z_min, z_max]
 * (default [1.2 D, 10 R_D]), walks outward from the focus to the first grid
 * step where the gain drops below 0.5 and bisects that step to `rel_tol`.
 */
template <typename T>
HalfPowerWindow half_power_window(const UraConfig<T>& cfg, const SphericalPoint<T>& focus,
                                  int points = 4096, T rel_tol = T(1e-6), T z_min = T(0),
                                  T z_max = T(0), DistanceModel model = DistanceModel::expanded) {
  if (z_min <= T(0)) z_min = cfg.near_field_min();
  if (z_max <= T(0)) z_max = T(10) * cfg.rayleigh_distance();
  const T r_f = focus.range();
  if (!(z_min < r_f && r_f < z_max)) {
    throw DomainError("half_power_window: focus range outside the scan interval");
  }
  const CVectorX<T> w = steering_vector(cfg, focus, model);
  auto gain = [&](T z) {
    return std::norm(w.dot(steering_vector(cfg, SphericalPoint<T>(focus.direction(), z), model)));
  };
  auto refine = [&](T inside, T outside) {
    while (std::abs(outside - inside) > rel_tol * std::min(inside, outside)) {
      const T mid = std::sqrt(inside * outside);
      (gain(mid) >= T(0.5) ? inside : outside) = mid;
    }
    return T(0.5) * (inside + outside);
  };
  const T log_lo = std::log(z_min);
  const T step = (std::log(z_max) - log_lo) / T(points - 1);
  auto grid = [&](int i) { return std::exp(log_lo + step * T(i)); };
  const int first_above = static_cast<int>(std::ceil((std::log(r_f) - log_lo) / step));

  HalfPowerWindow out;
  T inside = r_f;
  for (int i = first_above; i < points; ++i) {
    const T z = grid(i);
    if (gain(z) < T(0.5)) {
      out.upper_m = refine(inside, z);
      break;
    }
    inside = z;
  }
  inside = r_f;
  for (int i = first_above - 1; i >= 0; --i) {
    const T z = grid(i);
    if (gain(z) < T(0.5)) {
      out.lower_m = refine(inside, z);
      break;
    }
    inside = z;
  }
  return out;
}

}  // namespace nearfocus
