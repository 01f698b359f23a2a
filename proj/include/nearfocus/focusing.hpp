#pragma once

#include "nearfocus/geometry.hpp"

#include <map>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <span>
#include <variant>
#include <vector>

namespace nearfocus {

/// A length in meters that may be unbounded. Kept as a tag rather than an IEEE
/// infinity so tables and comparisons stay well defined.
class Extent {
 public:
  static Extent finite(double meters) { return Extent(meters); }
  static Extent infinite() { return Extent(); }

  bool is_finite() const { return value_.has_value(); }
  /// Throws std::bad_optional_access when infinite.
  double meters() const { return value_.value(); }

  friend bool operator==(const Extent&, const Extent&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Extent& e);

 private:
  Extent() = default;
  explicit Extent(double m) : value_(m) {}
  std::optional<double> value_;
};

/// Thrown for angles where β₁β₂ = 0 (endfire) and the 2-D analysis collapses.
class DegenerateAngleError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct BeamdepthResult {
  Extent bd = Extent::infinite();
  double rf_min_m = 0.0;
  Extent rf_max = Extent::infinite();
  double alpha_3db = 0.0;
  /// Endfire degeneracy; bd and rf_max are infinite, alpha_3db is 0.
  bool degenerate = false;
};

struct EbrdResult {
  double ebrd_m = 0.0;
  Dir angle = Dir::boresight();
  bool degenerate = false;
};

/**
 * Memoized α₃dB keyed by the ray ratio γ₁/γ₂, which is all the Fresnel gain
 * depends on. Concurrent lookups share a reader lock; misses compute outside
 * the lock and insert under a writer lock.
 */
class Alpha3dbCache {
 public:
  double get(double ratio);
  std::size_t size() const;
  void clear();

 private:
  mutable std::shared_mutex mutex_;
  std::map<double, double> values_;
};

/// Process-wide cache used by the free functions below.
Alpha3dbCache& alpha_3db_cache();

/**
 * γ₁γ₂ at the first (main-lobe) point where the 2-D Fresnel gain falls to 0.5,
 * moving outward from the focus along the ray γ₁/γ₂ = ratio. Uncached.
 */
double alpha_3db_for_ratio(double ratio);

/// γ² at the first point where (C²(γ)+S²(γ))/γ² = 0.5.
double alpha_3db_line();

/// Ray ratio η √(β₁/β₂) for a configuration and direction.
double gamma_ratio(const Ura& cfg, const Dir& dir);

/// Throws DegenerateAngleError when β₁β₂ = 0.
double alpha_3db(const Ura& cfg, const Dir& dir);

/**
 * 3 dB beamdepth around a focus at r_f. Finite when r_f lies below the
 * effective beamfocusing Rayleigh distance, otherwise bd and rf_max are infinite.
 * Throws DomainError when r_f < 1.2 D.
 */
BeamdepthResult beamdepth(const Ura& cfg, const Dir& dir, double r_f);

/// Effective beamfocusing Rayleigh distance: the largest r_f with a finite beamdepth.
EbrdResult ebrd(const Ura& cfg, const Dir& dir);

/// Square-array specialization (η = 1). Throws DomainError for non-square arrays.
BeamdepthResult beamdepth_usa(const Ura& cfg, const Dir& dir, double r_f);

/// Linear array along y (n2 = 1) at θ = π/2, using the 1-D 3 dB level.
BeamdepthResult beamdepth_ula(const Ura& cfg, double azimuth_rad, double r_f);

/// Beamdepth written in terms of the scalars it depends on. `area_factor` is
/// η R_D √(β₁β₂), `spread` is 4 α₃dB (η² + 1).
BeamdepthResult beamdepth_from_factors(double area_factor, double spread, double r_f,
                                       double alpha);

/// Nearest integer factor pair (n1, n2) with n1/n2 ≈ eta and n1·n2 ≈ n_bs.
/// Symmetric: the pair for 1/eta is the swap of the pair for eta.
std::pair<int, int> factor_pair(int n_bs, double eta);

/// r_f in meters, or a fraction of each geometry's Rayleigh distance.
struct FocusAbsolute {
  double meters;
};
struct FocusRayleighFraction {
  double fraction;
};
using FocusSpec = std::variant<FocusAbsolute, FocusRayleighFraction>;

struct EtaSweepRow {
  double eta_requested = 0.0;
  int n1 = 0;
  int n2 = 0;
  double eta = 0.0;
  double rayleigh_m = 0.0;
  double aperture_m = 0.0;
  double alpha_3db = 0.0;
  /// α₃dB (η² + 1) / η
  double combined_factor = 0.0;
  double rf_m = 0.0;
  BeamdepthResult beamdepth;
  double ebrd_m = 0.0;
};

/// 2⁻⁶ … 2⁶
std::vector<double> default_eta_grid();

std::vector<EtaSweepRow> eta_sweep(int n_bs, double carrier_hz, const Dir& dir, FocusSpec focus,
                                   std::span<const double> etas);

}  // namespace nearfocus
