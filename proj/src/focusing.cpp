#include "nearfocus/focusing.hpp"

#include "nearfocus/fresnel.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

namespace nearfocus {

std::ostream& operator<<(std::ostream& os, const Extent& e) {
  if (e.is_finite()) return os << e.meters();
  return os << "inf";
}

namespace {

constexpr double kScanStep = 0.01;
constexpr double kHalfPower = 0.5;

// Scans u upward from 0 until gain(u) first drops below 0.5, then bisects the
// bracketing step down to the resolution of a double.
template <typename Gain>
double first_half_power_crossing(Gain gain) {
  double lo = 0.0;
  double hi = kScanStep;
  while (gain(hi) >= kHalfPower) {
    lo = hi;
    hi += kScanStep;
    if (hi > 100.0) throw DomainError("alpha_3db: no half-power crossing found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (gain(mid) >= kHalfPower ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double alpha_3db_for_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw DegenerateAngleError("alpha_3db: ray ratio must be positive and finite");
  }
  // Scan on the larger of γ₁, γ₂ so the step stays meaningful for elongated arrays.
  const double r = std::max(ratio, 1.0 / ratio);
  const double u = first_half_power_crossing(
      [r](double g) { return fresnel_line_gain(g) * fresnel_line_gain(g / r); });
  return u * u / r;
}

double alpha_3db_line() {
  static const double value = [] {
    const double g = first_half_power_crossing([](double x) { return fresnel_line_gain(x); });
    return g * g;
  }();
  return value;
}

double Alpha3dbCache::get(double ratio) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = values_.find(ratio); it != values_.end()) return it->second;
  }
  const double value = alpha_3db_for_ratio(ratio);
  std::unique_lock lock(mutex_);
  values_.emplace(ratio, value);
  return value;
}

std::size_t Alpha3dbCache::size() const {
  std::shared_lock lock(mutex_);
  return values_.size();
}

void Alpha3dbCache::clear() {
  std::unique_lock lock(mutex_);
  values_.clear();
}

Alpha3dbCache& alpha_3db_cache() {
  static Alpha3dbCache cache;
  return cache;
}

double gamma_ratio(const Ura& cfg, const Dir& dir) {
  const auto q = directional_quantities(dir);
  if (!(q.beta1 * q.beta2 > 0.0)) {
    throw DegenerateAngleError("alpha_3db: endfire direction (beta1*beta2 = 0); use the ULA form");
  }
  return cfg.eta() * std::sqrt(q.beta1 / q.beta2);
}

double alpha_3db(const Ura& cfg, const Dir& dir) {
  return alpha_3db_cache().get(gamma_ratio(cfg, dir));
}

BeamdepthResult beamdepth_from_factors(double area_factor, double spread, double r_f,
                                       double alpha) {
  BeamdepthResult out;
  out.alpha_3db = alpha;
  const double a = area_factor;
  const double b = spread * r_f;
  out.rf_min_m = r_f * a / (a + b);
  if (a > b) {
    const double rf_max = r_f * a / (a - b);
    out.rf_max = Extent::finite(rf_max);
    out.bd = Extent::finite(rf_max - out.rf_min_m);
  } else {
    out.rf_max = Extent::infinite();
    out.bd = Extent::infinite();
  }
  return out;
}

namespace {

void check_focus_range(const Ura& cfg, double r_f, const char* who) {
  if (!std::isfinite(r_f) || r_f < cfg.near_field_min()) {
    throw DomainError(std::string(who) + ": focus range " + std::to_string(r_f) +
                      " m is below the near-field bound 1.2D = " +
                      std::to_string(cfg.near_field_min()) + " m");
  }
}

BeamdepthResult degenerate_beamdepth() {
  BeamdepthResult out;
  out.bd = Extent::infinite();
  out.rf_max = Extent::infinite();
  out.degenerate = true;
  return out;
}

}  // namespace

BeamdepthResult beamdepth(const Ura& cfg, const Dir& dir, double r_f) {
  check_focus_range(cfg, r_f, "beamdepth");
  const auto q = directional_quantities(dir);
  if (!(q.beta1 * q.beta2 > 0.0)) return degenerate_beamdepth();
  const double eta = cfg.eta();
  const double alpha = alpha_3db(cfg, dir);
  const double area = eta * cfg.rayleigh_distance() * std::sqrt(q.beta1 * q.beta2);
  const double spread = 4.0 * alpha * (eta * eta + 1.0);
  return beamdepth_from_factors(area, spread, r_f, alpha);
}

EbrdResult ebrd(const Ura& cfg, const Dir& dir) {
  EbrdResult out;
  out.angle = dir;
  const auto q = directional_quantities(dir);
  if (!(q.beta1 * q.beta2 > 0.0)) {
    out.degenerate = true;
    return out;
  }
  const double eta = cfg.eta();
  const double alpha = alpha_3db(cfg, dir);
  out.ebrd_m = eta * cfg.rayleigh_distance() * std::sqrt(q.beta1 * q.beta2) /
               (4.0 * alpha * (1.0 + eta * eta));
  return out;
}

BeamdepthResult beamdepth_usa(const Ura& cfg, const Dir& dir, double r_f) {
  if (cfg.n1() != cfg.n2()) throw DomainError("beamdepth_usa: array is not square");
  return beamdepth(cfg, dir, r_f);
}

BeamdepthResult beamdepth_ula(const Ura& cfg, double azimuth_rad, double r_f) {
  if (cfg.n2() != 1) throw DomainError("beamdepth_ula: array must have a single row (n2 = 1)");
  check_focus_range(cfg, r_f, "beamdepth_ula");
  const Dir dir(azimuth_rad, std::numbers::pi / 2.0);
  const double cos2 = directional_quantities(dir).beta1;
  if (!(cos2 > 0.0)) return degenerate_beamdepth();
  const double alpha = alpha_3db_line();
  return beamdepth_from_factors(cfg.rayleigh_distance() * cos2, 4.0 * alpha, r_f, alpha);
}

std::pair<int, int> factor_pair(int n_bs, double eta) {
  if (n_bs < 1 || !(eta > 0.0)) throw DomainError("factor_pair: need n_bs >= 1 and eta > 0");
  const double wide = std::max(eta, 1.0 / eta);
  const int a = std::max(1, static_cast<int>(std::lround(std::sqrt(n_bs * wide))));
  const int b = std::max(1, static_cast<int>(std::lround(static_cast<double>(n_bs) / a)));
  return eta >= 1.0 ? std::pair{a, b} : std::pair{b, a};
}

std::vector<double> default_eta_grid() {
  std::vector<double> grid;
  for (int k = -6; k <= 6; ++k) grid.push_back(std::ldexp(1.0, k));
  return grid;
}

std::vector<EtaSweepRow> eta_sweep(int n_bs, double carrier_hz, const Dir& dir, FocusSpec focus,
                                   std::span<const double> etas) {
  std::vector<EtaSweepRow> rows;
  rows.reserve(etas.size());
  for (const double eta_req : etas) {
    const auto [n1, n2] = factor_pair(n_bs, eta_req);
    const Ura cfg(n1, n2, carrier_hz);
    EtaSweepRow row;
    row.eta_requested = eta_req;
    row.n1 = n1;
    row.n2 = n2;
    row.eta = cfg.eta();
    row.rayleigh_m = cfg.rayleigh_distance();
    row.aperture_m = cfg.aperture();
    row.rf_m = std::visit(
        [&](const auto& f) {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>, FocusAbsolute>) {
            return f.meters;
          } else {
            return f.fraction * cfg.rayleigh_distance();
          }
        },
        focus);
    row.beamdepth = beamdepth(cfg, dir, row.rf_m);
    row.alpha_3db = row.beamdepth.alpha_3db;
    row.combined_factor = row.alpha_3db * (row.eta * row.eta + 1.0) / row.eta;
    row.ebrd_m = ebrd(cfg, dir).ebrd_m;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nearfocus
