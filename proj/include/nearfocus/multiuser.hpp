#pragma once

#include "nearfocus/channel.hpp"
#include "nearfocus/focusing.hpp"
#include "nearfocus/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nearfocus {

enum class CodebookKind { polar, dft };

std::string_view to_string(CodebookKind kind);

struct CodewordInfo {
  double uy = 0.0;
  double uz = 0.0;
  /// Focal range; infinite for planar (far-field) codewords.
  Extent range = Extent::infinite();
};

/// Codewords are the columns of an N_BS x K matrix; column index is the codeword index.
struct Codebook {
  CodebookKind kind = CodebookKind::polar;
  Eigen::MatrixXcd codewords;
  std::vector<CodewordInfo> info;
  int az_points = 0;
  int el_points = 0;
  int rings = 0;

  Eigen::Index size() const { return codewords.cols(); }
};

/// Centered uniform grid of `count` directional-cosine samples with spacing 2/count;
/// contains 0 for every count.
std::vector<double> directional_cosine_grid(int count);

/**
 * Joint angle-range codebook. Angles are sampled on a uniform (u_y, u_z) grid;
 * every visible grid angle gets `rings` focal ranges spaced uniformly in 1/r over
 * [1/EBRD(φ,θ), 1/(1.2 D)] (cell centers), followed by one far-field codeword.
 * Angles whose EBRD does not exceed 1.2 D get the far-field codeword only.
 */
Codebook build_polar_codebook(const Ura& cfg, int az_points, int el_points, int rings);

/// N1 x N2 orthogonal planar-wave codewords on the 2-D DFT grid.
Codebook build_dft_codebook(const Ura& cfg);

struct TrainingResult {
  std::vector<Eigen::Index> indices;
  /// |h_m^H c_k|² of the assigned codeword.
  std::vector<double> gains;
};

/**
 * Beam sweep. Each user, in order, takes the codeword maximizing |h_m^H c_k|²
 * among those not already assigned; ties go to the lowest index.
 * `channels` holds one user channel per column.
 */
TrainingResult beam_training(const Codebook& book, const Eigen::MatrixXcd& channels);

struct ZfResult {
  Eigen::MatrixXcd digital;  ///< N_RF x M
  bool degraded_rank = false;
};

/**
 * Zero-forcing digital precoder F = H^H (H H^H)^{-1} for the M x N_RF effective
 * channel H = [h_m^H W], columns rescaled so ‖W f_m‖ = 1. An ill-conditioned
 * Gram matrix is diagonally loaded with 1e-10·trace and flagged.
 */
ZfResult zf_precode(const Eigen::MatrixXcd& effective, const Eigen::MatrixXcd& analog);

struct PrecodingSolution {
  Eigen::MatrixXcd analog;   ///< N_BS x N_RF
  Eigen::MatrixXcd digital;  ///< N_RF x M
  Eigen::VectorXd power;     ///< p_m
  Eigen::VectorXd noise;     ///< σ_m²
};

struct UserRates {
  Eigen::VectorXd per_user;  ///< bps/Hz
  double total = 0.0;
};

/// R = Σ_m log₂(1 + p_m|h_m^H W f_m|² / (σ_m² + Σ_{l≠m} p_l|h_m^H W f_l|²)).
UserRates sum_rate(const Eigen::MatrixXcd& channels, const PrecodingSolution& solution);

enum class RegionKind { ebrd, extended, far_field, custom };

struct UserRegion {
  RegionKind kind = RegionKind::ebrd;
  double lo_m = 0.0;  ///< custom only
  double hi_m = 0.0;  ///< custom only
};

/// [1.2D, EBRD], [EBRD, R_D], [R_D, 100 R_D] or the custom bounds.
std::pair<double, double> region_bounds(const Ura& cfg, const UserRegion& region, const Dir& dir);

/// M ranges spaced uniformly in 1/r over [lo, hi], each jittered within its own cell.
std::vector<double> draw_user_ranges(double lo, double hi, int users, std::mt19937_64& rng);

/// Stream for one trial, a function of (seed, trial) only.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

struct ArraySpec {
  int n1 = 0;
  int n2 = 0;
  double carrier_hz = 28e9;
  double spacing_factor = 0.5;

  Ura build() const { return Ura(n1, n2, carrier_hz, spacing_factor); }
};

struct SumRateExperiment {
  ArraySpec array;
  CodebookKind codebook = CodebookKind::polar;
  int users = 1;
  UserRegion region;
  Dir user_direction = Dir::boresight();
  std::vector<double> snr_db;
  int trials = 0;
  std::uint64_t seed = 0;
  int n_rf = 4;
  int rings = 8;
  int az_points = 0;  ///< 0 selects n1
  int el_points = 0;  ///< 0 selects n2
  int threads = 1;
};

struct SumRateRecord {
  double snr_db = 0.0;
  CodebookKind codebook = CodebookKind::polar;
  double eta = 0.0;
  std::uint64_t seed = 0;
  int trial = 0;
  /// One entry per user; unscheduled users carry 0.
  Eigen::VectorXd user_rates;
  double sum_rate = 0.0;
  int scheduled = 0;
  bool degraded_rank = false;
};

/// One record per (trial, SNR), ordered trial-major. Independent of thread count.
std::vector<SumRateRecord> run_monte_carlo(const SumRateExperiment& experiment);

/// Single trial against a prebuilt codebook.
std::vector<SumRateRecord> run_trial(const SumRateExperiment& experiment, const Ura& cfg,
                                     const Codebook& book, int trial);

struct SnrSummary {
  double snr_db = 0.0;
  double mean = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  int trials = 0;
};

std::vector<SnrSummary> summarize(const std::vector<SumRateRecord>& records,
                                  const std::vector<double>& snr_db);

}  // namespace nearfocus
