#include "nearfocus/multiuser.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace nearfocus;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = {n(rng), n(rng)};
  }
  return m;
}

CVector user_channel(const Ura& a, const Point& p) {
  const PathSpec<double> path{1.0, p};
  return los_channel<double>(a, std::span(&path, 1));
}

Eigen::Index argmax_index(const Codebook& book, const CVector& h) {
  Eigen::Index best = 0;
  (book.codewords.adjoint() * h).cwiseAbs2().maxCoeff(&best);
  return best;
}

}  // namespace

TEST_CASE("directional cosine grid") {
  const auto g = directional_cosine_grid(8);
  REQUIRE(g.size() == 8);
  CHECK(g.front() == -1.0);
  CHECK(g[4] == 0.0);
  CHECK(g.back() == 0.75);
  const auto odd = directional_cosine_grid(5);
  CHECK(odd[2] == 0.0);
  CHECK_THAT(odd[4] - odd[3], WithinAbs(0.4, 1e-15));
  CHECK(directional_cosine_grid(1) == std::vector<double>{0.0});
}

TEST_CASE("polar codebook structure") {
  const Ura a(16, 8, 28e9);
  const Codebook one = build_polar_codebook(a, 1, 1, 1);
  CHECK(one.size() == 2);
  CHECK(one.info[0].range.is_finite());
  CHECK_FALSE(one.info[1].range.is_finite());

  const Codebook book = build_polar_codebook(a, 16, 8, 4);
  for (Eigen::Index k = 0; k < book.size(); ++k) {
    REQUIRE_THAT(book.codewords.col(k).norm(), WithinAbs(1.0, 1e-12));
    const auto& info = book.info[k];
    REQUIRE(info.uy * info.uy + info.uz * info.uz < 1.0);
  }

  // far-field codeword at boresight equals the DFT boresight codeword
  const Codebook dft = build_dft_codebook(a);
  Eigen::Index polar_bore = -1, dft_bore = -1;
  for (Eigen::Index k = 0; k < book.size(); ++k) {
    if (book.info[k].uy == 0.0 && book.info[k].uz == 0.0 && !book.info[k].range.is_finite()) polar_bore = k;
  }
  for (Eigen::Index k = 0; k < dft.size(); ++k) {
    if (dft.info[k].uy == 0.0 && dft.info[k].uz == 0.0) dft_bore = k;
  }
  REQUIRE(polar_bore >= 0);
  REQUIRE(dft_bore >= 0);
  CHECK((book.codewords.col(polar_bore) - dft.codewords.col(dft_bore)).norm() < 1e-14);

  // rings are uniform in 1/r over [1/EBRD, 1/(1.2D)] at each angle
  std::vector<double> bore_rings;
  for (Eigen::Index k = 0; k < book.size(); ++k) {
    if (book.info[k].uy == 0.0 && book.info[k].uz == 0.0 && book.info[k].range.is_finite()) {
      bore_rings.push_back(book.info[k].range.meters());
    }
  }
  REQUIRE(bore_rings.size() == 4);
  const double inv_far = 1.0 / ebrd(a, Dir::boresight()).ebrd_m;
  const double inv_near = 1.0 / a.near_field_min();
  for (int s = 0; s < 4; ++s) {
    CHECK_THAT(1.0 / bore_rings[s], WithinRel(inv_far + (s + 0.5) / 4 * (inv_near - inv_far), 1e-12));
  }

  CHECK_THROWS_AS(build_polar_codebook(a, 4, 4, 0), DomainError);
}

TEST_CASE("matched codeword reaches full gain") {
  const Ura a(16, 8, 28e9);
  const Codebook book = build_polar_codebook(a, 16, 8, 4);
  for (Eigen::Index k : {Eigen::Index(0), book.size() / 2, book.size() - 2}) {
    const auto& info = book.info[k];
    if (!info.range.is_finite()) continue;
    const double st = std::sqrt(1 - info.uz * info.uz);
    const Point p(std::asin(info.uy / st), std::acos(info.uz), info.range.meters());
    const CVector h = user_channel(a, p);
    CHECK_THAT(std::norm(book.codewords.col(k).dot(h / h.norm())), WithinAbs(1.0, 1e-12));
    const TrainingResult t = beam_training(book, h);
    CHECK(t.indices[0] == k);
  }
}

TEST_CASE("DFT codebook") {
  for (auto [n1, n2] : {std::pair{8, 4}, {5, 3}, {16, 16}}) {
    const Ura a(n1, n2, 28e9);
    const Codebook dft = build_dft_codebook(a);
    CHECK(dft.size() == n1 * n2);
    const Eigen::MatrixXcd gram = dft.codewords.adjoint() * dft.codewords;
    CHECK((gram - Eigen::MatrixXcd::Identity(n1 * n2, n1 * n2)).cwiseAbs().maxCoeff() < 1e-10);
  }
  const Ura a(8, 4, 28e9);
  const Codebook dft = build_dft_codebook(a);
  for (Eigen::Index k = 0; k < dft.size(); ++k) {
    if (dft.info[k].uy != 0.0 || dft.info[k].uz != 0.0) continue;
    const auto c = dft.codewords.col(k);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      CHECK(std::abs(c[i] - std::complex<double>(1 / std::sqrt(32.0), 0.0)) < 1e-15);
    }
  }
}

TEST_CASE("beam training") {
  std::mt19937_64 rng(8);
  Codebook book;
  book.codewords = random_complex(12, 30, rng);
  book.codewords = book.codewords.colwise().normalized().eval();

  // single user, exhaustive oracle
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXcd h = random_complex(12, 1, rng);
    double best = -1;
    Eigen::Index idx = -1;
    for (Eigen::Index k = 0; k < 30; ++k) {
      const double s = std::norm(book.codewords.col(k).dot(h.col(0)));
      if (s > best) {
        best = s;
        idx = k;
      }
    }
    const auto t = beam_training(book, h);
    CHECK(t.indices[0] == idx);
    CHECK_THAT(t.gains[0], WithinRel(best, 1e-12));
  }

  // multi-user: each later user gets its best untaken codeword
  const Eigen::MatrixXcd hs = random_complex(12, 5, rng);
  const auto t = beam_training(book, hs);
  std::vector<bool> taken(30, false);
  for (int m = 0; m < 5; ++m) {
    double best = -1;
    Eigen::Index idx = -1;
    for (Eigen::Index k = 0; k < 30; ++k) {
      if (taken[k]) continue;
      const double s = std::norm(book.codewords.col(k).dot(hs.col(m)));
      if (s > best) {
        best = s;
        idx = k;
      }
    }
    taken[idx] = true;
    CHECK(t.indices[m] == idx);
  }

  // ties resolve to the lowest index
  Codebook dup;
  dup.codewords = Eigen::MatrixXcd::Zero(4, 3);
  dup.codewords(0, 0) = dup.codewords(1, 1) = dup.codewords(1, 2) = 1.0;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 2);
  h(1, 0) = 1.0;
  h(1, 1) = 1.0;
  const auto tie = beam_training(dup, h);
  CHECK(tie.indices == std::vector<Eigen::Index>{1, 2});

  // orthogonal users keep their own argmax
  const Ura a(8, 8, 28e9);
  const Codebook dft = build_dft_codebook(a);
  Eigen::MatrixXcd two(64, 2);
  two.col(0) = dft.codewords.col(5);
  two.col(1) = dft.codewords.col(40);
  const auto own = beam_training(dft, two);
  CHECK(own.indices == std::vector<Eigen::Index>{5, 40});

  CHECK_THROWS_AS(beam_training(dup, random_complex(4, 4, rng)), DomainError);
}

TEST_CASE("range-separated users: polar separates, DFT collides") {
  const Ura a(64, 8, 28e9);
  const Dir bore = Dir::boresight();
  const double e = ebrd(a, bore).ebrd_m;
  const double lo = a.near_field_min();
  // similar defocus, neighbouring polar rings; closer in, the DFT optimum drifts off boresight
  const CVector h_near = user_channel(a, Point(bore, 1.0 / (1.0 / e + 0.15 * (1.0 / lo - 1.0 / e))));
  const CVector h_far = user_channel(a, Point(bore, 1.0 / (1.0 / e + 0.10 * (1.0 / lo - 1.0 / e))));

  const Codebook polar = build_polar_codebook(a, 64, 8, 8);
  const Codebook dft = build_dft_codebook(a);
  CHECK(argmax_index(polar, h_near) != argmax_index(polar, h_far));
  CHECK(argmax_index(dft, h_near) == argmax_index(dft, h_far));
}

TEST_CASE("zero-forcing precoder") {
  std::mt19937_64 rng(12);
  for (int users : {1, 2, 3, 4}) {
    const Eigen::MatrixXcd analog = random_complex(32, 4, rng).colwise().normalized();
    const Eigen::MatrixXcd channels = random_complex(32, users, rng);
    const Eigen::MatrixXcd eff = channels.adjoint() * analog;
    const ZfResult zf = zf_precode(eff, analog);
    CHECK_FALSE(zf.degraded_rank);
    const Eigen::MatrixXcd g = channels.adjoint() * analog * zf.digital;
    for (int m = 0; m < users; ++m) {
      CHECK_THAT((analog * zf.digital.col(m)).norm(), WithinAbs(1.0, 1e-12));
      for (int l = 0; l < users; ++l) {
        if (l != m) CHECK(std::abs(g(m, l)) <= 1e-9 * std::abs(g(m, m)));
      }
    }
  }

  // single user: matched-filter direction
  const Eigen::MatrixXcd analog = random_complex(16, 2, rng).colwise().normalized();
  const Eigen::MatrixXcd h = random_complex(16, 1, rng);
  const Eigen::MatrixXcd eff = h.adjoint() * analog;
  const ZfResult zf = zf_precode(eff, analog);
  const Eigen::VectorXcd f = zf.digital.col(0);
  const Eigen::VectorXcd mf = eff.adjoint().col(0);
  CHECK(std::abs(std::abs(f.dot(mf)) - f.norm() * mf.norm()) < 1e-12 * f.norm() * mf.norm());

  // orthogonal effective channels: F ∝ H^H column-wise
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(3, 3);
  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(2, 3);
  diag(0, 0) = {2.0, 1.0};
  diag(1, 2) = {0.0, -3.0};
  const ZfResult o = zf_precode(diag, id);
  for (int m = 0; m < 2; ++m) {
    const Eigen::VectorXcd col = diag.adjoint().col(m).normalized();
    CHECK((o.digital.col(m) - col).norm() < 1e-12);
  }

  // rank-deficient: regularized and flagged
  Eigen::MatrixXcd dup = Eigen::MatrixXcd::Zero(2, 3);
  dup.row(0) << 1.0, 2.0, 0.5;
  dup.row(1) = dup.row(0);
  const ZfResult r = zf_precode(dup, id);
  CHECK(r.degraded_rank);
  CHECK(r.digital.allFinite());

  CHECK_THROWS_AS(zf_precode(random_complex(5, 4, rng), random_complex(8, 4, rng)), DomainError);
}

TEST_CASE("sum rate") {
  std::mt19937_64 rng(21);
  const int n = 16, r = 3, m = 3;
  PrecodingSolution sol{random_complex(n, r, rng), random_complex(r, m, rng), Eigen::VectorXd(m),
                        Eigen::VectorXd(m)};
  sol.power << 0.5, 2.0, 1.3;
  sol.noise << 1.0, 0.2, 3.0;
  const Eigen::MatrixXcd h = random_complex(n, m, rng);
  const UserRates got = sum_rate(h, sol);

  double total = 0;
  for (int u = 0; u < m; ++u) {
    double interference = 0, signal = 0;
    for (int l = 0; l < m; ++l) {
      std::complex<double> s = 0;
      for (int i = 0; i < n; ++i) {
        std::complex<double> wf = 0;
        for (int k = 0; k < r; ++k) wf += sol.analog(i, k) * sol.digital(k, l);
        s += std::conj(h(i, u)) * wf;
      }
      (l == u ? signal : interference) += sol.power[l] * std::norm(s);
    }
    const double rate = std::log2(1 + signal / (sol.noise[u] + interference));
    CHECK_THAT(got.per_user[u], WithinRel(rate, 1e-12));
    total += rate;
  }
  CHECK_THAT(got.total, WithinRel(total, 1e-12));

  sol.power.setZero();
  CHECK(sum_rate(h, sol).total == 0.0);

  // single user, perfect beam: log₂(1 + SNR·‖h‖²)
  const Ura a(8, 8, 28e9);
  const Point p(Dir::boresight(), 0.3);
  const CVector hu = user_channel(a, p);
  PrecodingSolution one{steering_vector(a, p), Eigen::MatrixXcd::Ones(1, 1), Eigen::VectorXd::Constant(1, 0.1),
                        Eigen::VectorXd::Ones(1)};
  CHECK_THAT(sum_rate(hu, one).total, WithinRel(std::log2(1 + 0.1 * 64.0), 1e-12));
}

TEST_CASE("user placement and streams") {
  auto a = trial_rng(5, 7);
  auto b = trial_rng(5, 7);
  auto c = trial_rng(5, 8);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());

  auto rng = trial_rng(1, 0);
  const auto ranges = draw_user_ranges(0.5, 4.0, 5, rng);
  REQUIRE(ranges.size() == 5);
  for (int m = 0; m < 5; ++m) {
    // m-th cell in inverse distance, nearest-last
    const double cell = (1 / 0.5 - 1 / 4.0) / 5;
    const double inv = 1 / ranges[m];
    CHECK(inv >= 1 / 4.0 + m * cell);
    CHECK(inv <= 1 / 4.0 + (m + 1) * cell);
  }
  CHECK_THROWS_AS(draw_user_ranges(2.0, 1.0, 3, rng), DomainError);

  const Ura u(64, 8, 28e9);
  const auto [lo, hi] = region_bounds(u, {RegionKind::ebrd}, Dir::boresight());
  CHECK(lo == u.near_field_min());
  CHECK(hi == ebrd(u, Dir::boresight()).ebrd_m);
  const auto [flo, fhi] = region_bounds(u, {RegionKind::far_field}, Dir::boresight());
  CHECK(flo == u.rayleigh_distance());
  CHECK(fhi == 100 * u.rayleigh_distance());
}

TEST_CASE("Monte Carlo determinism and bookkeeping") {
  SumRateExperiment ex;
  ex.array = {32, 8};
  ex.codebook = CodebookKind::polar;
  ex.users = 5;
  ex.snr_db = {-20, -10, 0};
  ex.trials = 12;
  ex.seed = 99;
  ex.rings = 4;

  CHECK(run_monte_carlo([&] { auto e = ex; e.trials = 0; return e; }()).empty());

  const auto serial = run_monte_carlo(ex);
  auto threaded_ex = ex;
  threaded_ex.threads = 4;
  const auto threaded = run_monte_carlo(threaded_ex);
  const auto again = run_monte_carlo(ex);
  REQUIRE(serial.size() == 36);
  REQUIRE(threaded.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial[i].sum_rate == threaded[i].sum_rate);
    REQUIRE(serial[i].sum_rate == again[i].sum_rate);
    REQUIRE(serial[i].user_rates == threaded[i].user_rates);
    REQUIRE(serial[i].trial == static_cast<int>(i / 3));
    REQUIRE(serial[i].snr_db == ex.snr_db[i % 3]);
    REQUIRE(serial[i].scheduled == 4);
    REQUIRE(serial[i].user_rates.minCoeff() >= 0.0);
    REQUIRE_THAT(serial[i].sum_rate, WithinRel(serial[i].user_rates.sum(), 1e-15));
    REQUIRE((serial[i].user_rates.array() > 0).count() == 4);
  }

  auto other = ex;
  other.seed = 100;
  CHECK(run_monte_carlo(other)[0].sum_rate != serial[0].sum_rate);

  const auto summary = summarize(serial, ex.snr_db);
  REQUIRE(summary.size() == 3);
  for (const auto& s : summary) {
    CHECK(s.trials == 12);
    CHECK(s.ci95_low <= s.mean);
    CHECK(s.ci95_high >= s.mean);
  }
  CHECK(summary[0].mean < summary[2].mean);
}

TEST_CASE("interference-free scaling at high SNR") {
  // ZF removes interference, so each served user gains 1 bit per 3.01 dB
  SumRateExperiment ex;
  ex.array = {64, 8};
  ex.codebook = CodebookKind::polar;
  ex.users = 4;
  ex.snr_db = {30, 40};
  ex.trials = 20;
  ex.seed = 3;
  const auto s = summarize(run_monte_carlo(ex), ex.snr_db);
  const double slope = (s[1].mean - s[0].mean) / 10.0;
  CHECK_THAT(slope, WithinRel(4.0 / (10 * std::log10(2.0)), 0.02));
}
