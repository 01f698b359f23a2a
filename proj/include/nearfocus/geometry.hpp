#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nearfocus {

inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Radial lower bound of the radiative near field, in units of the aperture D.
inline constexpr double kNearFieldApertureFactor = 1.2;

/// Thrown when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/**
 * Uniform rectangular array on the y-z plane.
 *
 * n1 elements along y, n2 along z, uniform spacing d in both directions.
 * Element positions are (0, n d, m d) with offsets n, m symmetric around the
 * array center: for odd counts the offsets are the integers -Ñ..Ñ with
 * Ñ = ceil((N-1)/2); for even counts they are the half-integers
 * -(N-1)/2 .. (N-1)/2, which keeps the set symmetric with exactly N entries.
 */
template <typename T>
class UraConfig {
 public:
  UraConfig(int n1, int n2, T carrier_hz, T spacing_factor = T(0.5))
      : n1_(n1), n2_(n2), carrier_hz_(carrier_hz) {
    if (n1 < 1 || n2 < 1) {
      throw DomainError("UraConfig: element counts must be >= 1 (got " + std::to_string(n1) +
                        " x " + std::to_string(n2) + ")");
    }
    if (!(carrier_hz > T(0)) || !std::isfinite(static_cast<double>(carrier_hz))) {
      throw DomainError("UraConfig: carrier frequency must be positive and finite");
    }
    if (!(spacing_factor > T(0)) || !std::isfinite(static_cast<double>(spacing_factor))) {
      throw DomainError("UraConfig: spacing factor must be positive and finite");
    }
    wavelength_ = T(kSpeedOfLight) / carrier_hz;
    spacing_ = spacing_factor * wavelength_;
    aperture_ = spacing_ * std::sqrt(T(n1) * T(n1) + T(n2) * T(n2));
    rayleigh_ = T(2) * aperture_ * aperture_ / wavelength_;
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  /// N_BS
  int size() const { return n1_ * n2_; }

  T carrier_hz() const { return carrier_hz_; }
  T wavelength() const { return wavelength_; }
  T spacing() const { return spacing_; }
  T aperture() const { return aperture_; }
  T rayleigh_distance() const { return rayleigh_; }
  /// Width-to-height ratio N1/N2.
  T eta() const { return T(n1_) / T(n2_); }
  /// ν = 2πf/c
  T wavenumber() const { return T(2) * std::numbers::pi_v<T> / wavelength_; }
  T near_field_min() const { return T(kNearFieldApertureFactor) * aperture_; }

  /// Ñ = ceil((N-1)/2) for each axis.
  int index_bound1() const { return n1_ / 2; }
  int index_bound2() const { return n2_ / 2; }

  /// Largest |offset| along each axis, (N-1)/2.
  T half_span1() const { return T(n1_ - 1) / T(2); }
  T half_span2() const { return T(n2_ - 1) / T(2); }

  VectorX<T> offsets1() const { return offsets(n1_); }
  VectorX<T> offsets2() const { return offsets(n2_); }

  /// Row-major flat index of element (k1, k2), k in [0, N).
  Eigen::Index flat_index(int k1, int k2) const { return Eigen::Index(k1) * n2_ + k2; }

 private:
  static VectorX<T> offsets(int n) {
    return VectorX<T>::LinSpaced(n, -T(n - 1) / T(2), T(n - 1) / T(2));
  }

  int n1_;
  int n2_;
  T carrier_hz_;
  T wavelength_{};
  T spacing_{};
  T aperture_{};
  T rayleigh_{};
};

template <typename T>
UraConfig<T> build_ura(int n1, int n2, T carrier_hz, T spacing_factor = T(0.5)) {
  return UraConfig<T>(n1, n2, carrier_hz, spacing_factor);
}

template <typename T>
struct DirectionalQuantities {
  T ux, uy, uz;
  T beta1;  ///< 1 - sin²θ sin²φ
  T beta2;  ///< sin²θ
};

/**
 * Look direction. φ is the azimuth in [-π/2, π/2]; θ is measured from the
 * z-axis (NOT from the horizon) so boresight is θ = π/2 and u_z = cos θ.
 */
template <typename T>
class Direction {
 public:
  Direction(T azimuth_rad, T elevation_rad) : phi_(azimuth_rad), theta_(elevation_rad) {
    const T half_pi = std::numbers::pi_v<T> / T(2);
    if (!(phi_ >= -half_pi && phi_ <= half_pi)) {
      throw DomainError("Direction: azimuth must lie in [-pi/2, pi/2]");
    }
    if (!(theta_ > T(0) && theta_ < std::numbers::pi_v<T>)) {
      throw DomainError("Direction: elevation (from the z-axis) must lie in (0, pi)");
    }
  }

  static Direction boresight() { return Direction(T(0), std::numbers::pi_v<T> / T(2)); }

  T azimuth() const { return phi_; }
  T elevation() const { return theta_; }

 private:
  T phi_;
  T theta_;
};

template <typename T>
DirectionalQuantities<T> directional_quantities(const Direction<T>& dir) {
  const T st = std::sin(dir.elevation());
  const T sp = std::sin(dir.azimuth());
  const T uy = st * sp;
  return {st * std::cos(dir.azimuth()), uy, std::cos(dir.elevation()), T(1) - uy * uy, st * st};
}

/// (φ, θ, r) with r > 0.
template <typename T>
class SphericalPoint {
 public:
  SphericalPoint(T azimuth_rad, T elevation_rad, T range_m)
      : SphericalPoint(Direction<T>(azimuth_rad, elevation_rad), range_m) {}

  SphericalPoint(Direction<T> dir, T range_m) : dir_(dir), range_(range_m) {
    if (!(range_m > T(0)) || !std::isfinite(static_cast<double>(range_m))) {
      throw DomainError("SphericalPoint: range must be positive and finite");
    }
  }

  const Direction<T>& direction() const { return dir_; }
  T azimuth() const { return dir_.azimuth(); }
  T elevation() const { return dir_.elevation(); }
  T range() const { return range_; }

 private:
  Direction<T> dir_;
  T range_;
};

template <typename T>
DirectionalQuantities<T> directional_quantities(const SphericalPoint<T>& p) {
  return directional_quantities(p.direction());
}

using Ura = UraConfig<double>;
using Dir = Direction<double>;
using Point = SphericalPoint<double>;

}  // namespace nearfocus
