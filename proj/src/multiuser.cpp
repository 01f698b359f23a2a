#include "nearfocus/multiuser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace nearfocus {

std::string_view to_string(CodebookKind kind) {
  return kind == CodebookKind::polar ? "polar" : "dft";
}

std::vector<double> directional_cosine_grid(int count) {
  if (count < 1) throw DomainError("directional_cosine_grid: count must be >= 1");
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = 2.0 * (i - count / 2) / count;
  return grid;
}

Codebook build_polar_codebook(const Ura& cfg, int az_points, int el_points, int rings) {
  if (rings < 1) throw DomainError("build_polar_codebook: ring count must be >= 1");
  const auto uy_grid = directional_cosine_grid(az_points);
  const auto uz_grid = directional_cosine_grid(el_points);
  const double inv_near = 1.0 / cfg.near_field_min();

  std::vector<CVector> columns;
  Codebook book;
  book.kind = CodebookKind::polar;
  book.az_points = az_points;
  book.el_points = el_points;
  book.rings = rings;

  for (const double uy : uy_grid) {
    for (const double uz : uz_grid) {
      // invisible region and endfire
      if (uy * uy + uz * uz >= 1.0) continue;
      const double sin_theta = std::sqrt(1.0 - uz * uz);
      const Dir dir(std::asin(uy / sin_theta), std::acos(uz));
      const double limit = ebrd(cfg, dir).ebrd_m;
      if (limit > cfg.near_field_min()) {
        const double inv_far = 1.0 / limit;
        for (int s = 0; s < rings; ++s) {
          const double r = 1.0 / (inv_far + (s + 0.5) / rings * (inv_near - inv_far));
          columns.push_back(steering_vector(cfg, Point(dir, r)));
          book.info.push_back({uy, uz, Extent::finite(r)});
        }
      }
      columns.push_back(planar_steering_vector(cfg, uy, uz));
      book.info.push_back({uy, uz, Extent::infinite()});
    }
  }

  book.codewords.resize(cfg.size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) book.codewords.col(k) = columns[k];
  return book;
}

Codebook build_dft_codebook(const Ura& cfg) {
  Codebook book;
  book.kind = CodebookKind::dft;
  book.az_points = cfg.n1();
  book.el_points = cfg.n2();
  book.codewords.resize(cfg.size(), cfg.size());
  // u scaled so the inter-element phase step is 2πk/N
  const double to_cosine = cfg.wavelength() / (2.0 * cfg.spacing());
  const auto psi1 = directional_cosine_grid(cfg.n1());
  const auto psi2 = directional_cosine_grid(cfg.n2());
  Eigen::Index k = 0;
  for (const double p1 : psi1) {
    for (const double p2 : psi2) {
      const double uy = p1 * to_cosine;
      const double uz = p2 * to_cosine;
      book.codewords.col(k++) = planar_steering_vector(cfg, uy, uz);
      book.info.push_back({uy, uz, Extent::infinite()});
    }
  }
  return book;
}

TrainingResult beam_training(const Codebook& book, const Eigen::MatrixXcd& channels) {
  const Eigen::Index users = channels.cols();
  if (users < 1) throw DomainError("beam_training: at least one user is required");
  if (users > book.size()) throw DomainError("beam_training: more users than codewords");
  if (channels.rows() != book.codewords.rows()) {
    throw DomainError("beam_training: channel length does not match codebook");
  }
  const Eigen::MatrixXd scores = (book.codewords.adjoint() * channels).cwiseAbs2();

  TrainingResult out;
  std::vector<bool> taken(book.size(), false);
  for (Eigen::Index m = 0; m < users; ++m) {
    Eigen::Index best = -1;
    for (Eigen::Index k = 0; k < book.size(); ++k) {
      if (taken[k]) continue;
      if (best < 0 || scores(k, m) > scores(best, m)) best = k;
    }
    taken[best] = true;
    out.indices.push_back(best);
    out.gains.push_back(scores(best, m));
  }
  return out;
}

ZfResult zf_precode(const Eigen::MatrixXcd& effective, const Eigen::MatrixXcd& analog) {
  const Eigen::Index users = effective.rows();
  if (users < 1) throw DomainError("zf_precode: empty effective channel");
  if (users > effective.cols()) throw DomainError("zf_precode: more users than RF chains");
  if (analog.cols() != effective.cols()) {
    throw DomainError("zf_precode: analog precoder width does not match N_RF");
  }

  ZfResult out;
  Eigen::MatrixXcd gram = effective * effective.adjoint();
  Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
    out.degraded_rank = true;
    const double load = 1e-10 * gram.trace().real();
    gram.diagonal().array() += load > 0.0 ? load : 1e-300;
    llt.compute(gram);
  }
  out.digital = effective.adjoint() * llt.solve(Eigen::MatrixXcd::Identity(users, users));
  for (Eigen::Index m = 0; m < users; ++m) {
    const double norm = (analog * out.digital.col(m)).norm();
    if (norm > 0.0) out.digital.col(m) /= norm;
  }
  return out;
}

UserRates sum_rate(const Eigen::MatrixXcd& channels, const PrecodingSolution& solution) {
  const Eigen::Index users = channels.cols();
  if (solution.digital.cols() != users || solution.power.size() != users ||
      solution.noise.size() != users || solution.analog.rows() != channels.rows() ||
      solution.analog.cols() != solution.digital.rows()) {
    throw DomainError("sum_rate: inconsistent dimensions");
  }
  // gains(m, l) = |h_m^H W f_l|²
  const Eigen::MatrixXd gains =
      (channels.adjoint() * solution.analog * solution.digital).cwiseAbs2();
  UserRates out;
  out.per_user.resize(users);
  for (Eigen::Index m = 0; m < users; ++m) {
    double interference = 0.0;
    for (Eigen::Index l = 0; l < users; ++l) {
      if (l != m) interference += solution.power[l] * gains(m, l);
    }
    const double sinr = solution.power[m] * gains(m, m) / (solution.noise[m] + interference);
    out.per_user[m] = std::log2(1.0 + sinr);
  }
  out.total = out.per_user.sum();
  return out;
}

std::pair<double, double> region_bounds(const Ura& cfg, const UserRegion& region, const Dir& dir) {
  const double rd = cfg.rayleigh_distance();
  switch (region.kind) {
    case RegionKind::ebrd: return {cfg.near_field_min(), ebrd(cfg, dir).ebrd_m};
    case RegionKind::extended: return {ebrd(cfg, dir).ebrd_m, rd};
    case RegionKind::far_field: return {rd, 100.0 * rd};
    case RegionKind::custom: return {region.lo_m, region.hi_m};
  }
  return {0.0, 0.0};
}

std::vector<double> draw_user_ranges(double lo, double hi, int users, std::mt19937_64& rng) {
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("draw_user_ranges: need 0 < lo < hi");
  const double inv_hi = 1.0 / hi;
  const double cell = (1.0 / lo - inv_hi) / users;
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<double> ranges(users);
  for (int m = 0; m < users; ++m) ranges[m] = 1.0 / (inv_hi + (m + jitter(rng)) * cell);
  return ranges;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

std::vector<SumRateRecord> run_trial(const SumRateExperiment& ex, const Ura& cfg,
                                     const Codebook& book, int trial) {
  auto rng = trial_rng(ex.seed, static_cast<std::uint64_t>(trial));
  const auto [lo, hi] = region_bounds(cfg, ex.region, ex.user_direction);
  const auto ranges = draw_user_ranges(lo, hi, ex.users, rng);

  Eigen::MatrixXcd channels(cfg.size(), ex.users);
  for (int m = 0; m < ex.users; ++m) {
    const PathSpec<double> path{1.0, Point(ex.user_direction, ranges[m])};
    channels.col(m) = los_channel<double>(cfg, std::span(&path, 1));
  }
  const TrainingResult training = beam_training(book, channels);

  // serve the strongest min(M, N_RF) users
  std::vector<int> order(ex.users);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return training.gains[a] > training.gains[b]; });
  const int served = std::min(ex.users, ex.n_rf);
  order.resize(served);

  Eigen::MatrixXcd analog(cfg.size(), served);
  Eigen::MatrixXcd served_channels(cfg.size(), served);
  for (int j = 0; j < served; ++j) {
    analog.col(j) = book.codewords.col(training.indices[order[j]]);
    served_channels.col(j) = channels.col(order[j]);
  }
  const Eigen::MatrixXcd effective = served_channels.adjoint() * analog;
  const ZfResult zf = zf_precode(effective, analog);

  PrecodingSolution solution{analog, zf.digital, Eigen::VectorXd(served),
                             Eigen::VectorXd::Ones(served)};
  std::vector<SumRateRecord> records;
  records.reserve(ex.snr_db.size());
  for (const double snr : ex.snr_db) {
    solution.power.setConstant(std::pow(10.0, snr / 10.0));
    const UserRates rates = sum_rate(served_channels, solution);
    SumRateRecord rec;
    rec.snr_db = snr;
    rec.codebook = ex.codebook;
    rec.eta = cfg.eta();
    rec.seed = ex.seed;
    rec.trial = trial;
    rec.user_rates = Eigen::VectorXd::Zero(ex.users);
    for (int j = 0; j < served; ++j) rec.user_rates[order[j]] = rates.per_user[j];
    rec.sum_rate = rec.user_rates.sum();
    rec.scheduled = served;
    rec.degraded_rank = zf.degraded_rank;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SumRateRecord> run_monte_carlo(const SumRateExperiment& ex) {
  if (ex.trials < 0) throw DomainError("run_monte_carlo: trial count must be >= 0");
  if (ex.trials == 0) return {};
  if (ex.users < 1) throw DomainError("run_monte_carlo: at least one user is required");
  if (ex.n_rf < 1) throw DomainError("run_monte_carlo: N_RF must be >= 1");

  const Ura cfg = ex.array.build();
  const Codebook book =
      ex.codebook == CodebookKind::polar
          ? build_polar_codebook(cfg, ex.az_points > 0 ? ex.az_points : cfg.n1(),
                                 ex.el_points > 0 ? ex.el_points : cfg.n2(), ex.rings)
          : build_dft_codebook(cfg);

  std::vector<std::vector<SumRateRecord>> per_trial(ex.trials);
  const int workers = std::clamp(ex.threads, 1, ex.trials);
  if (workers == 1) {
    for (int t = 0; t < ex.trials; ++t) per_trial[t] = run_trial(ex, cfg, book, t);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (int t = w; t < ex.trials; t += workers) per_trial[t] = run_trial(ex, cfg, book, t);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<SumRateRecord> records;
  records.reserve(static_cast<std::size_t>(ex.trials) * ex.snr_db.size());
  for (auto& trial : per_trial) {
    for (auto& rec : trial) records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SnrSummary> summarize(const std::vector<SumRateRecord>& records,
                                  const std::vector<double>& snr_db) {
  std::vector<SnrSummary> out;
  for (const double snr : snr_db) {
    SnrSummary s;
    s.snr_db = snr;
    std::vector<double> values;
    for (const auto& r : records) {
      if (r.snr_db == snr) values.push_back(r.sum_rate);
    }
    s.trials = static_cast<int>(values.size());
    if (!values.empty()) {
      const double n = static_cast<double>(values.size());
      s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double var = 0.0;
      for (const double v : values) var += (v - s.mean) * (v - s.mean);
      const double half = values.size() > 1 ? 1.96 * std::sqrt(var / (n - 1.0) / n) : 0.0;
      s.ci95_low = s.mean - half;
      s.ci95_high = s.mean + half;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace nearfocus
