#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <twinmap/noise.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace twinmap;

namespace {

// Signed-sum variance w^T C w built directly from partition_covariance.
double quadratic_form(const PairMoments &m, const std::vector<Tap> &probe, const std::vector<Tap> &conj,
                      double eps) {
  std::vector<double> tp, tc;
  for (const auto &t : probe)
    tp.push_back(t.transmission);
  for (const auto &t : conj)
    tc.push_back(t.transmission);
  const PartitionMoments pm = partition_covariance(m, tp, tc);
  Eigen::VectorXd w(static_cast<Eigen::Index>(probe.size() + conj.size()));
  Eigen::Index k = 0;
  for (const auto *arm : {&probe, &conj})
    for (const auto &t : *arm)
      w(k++) = t.sign > 0 ? 1.0 : (t.sign < 0 ? -(1.0 - eps) : 0.0);
  return w.dot(pm.cov * w);
}

std::vector<Tap> random_taps(std::mt19937_64 &rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> s(-1, 1);
  std::vector<double> raw(static_cast<std::size_t>(n) + 1);
  double sum = 0;
  for (auto &r : raw)
    sum += (r = u(rng));
  std::vector<Tap> taps;
  for (int i = 0; i < n; ++i)
    taps.push_back({raw[static_cast<std::size_t>(i)] / sum, s(rng)});
  return taps;
}

const double kGains[] = {1.1, 2.0, 5.0, 12.6, 50.0};

} // namespace

TEST_CASE("pair moments at G = 2, N0 = 1") {
  const PairMoments m = pair_moments(TwoModeSqueezedPair(2.0, 1.0));
  CHECK(m.var_probe == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(m.var_conj == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(m.cov == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(m.var_probe + m.var_conj - 2 * m.cov == doctest::Approx(1.0));
}

TEST_CASE("G = 1 is a coherent state with no correlation") {
  const PairMoments m = pair_moments(TwoModeSqueezedPair(1.0, 3.0));
  CHECK(m.var_probe == doctest::Approx(m.mean_probe));
  CHECK(m.mean_conj == 0.0);
  CHECK(m.cov == 0.0);
}

TEST_CASE("moment matrix is positive semidefinite") {
  for (double g : kGains) {
    const PairMoments m = pair_moments(TwoModeSqueezedPair(g, 1.0));
    Eigen::Matrix2d c;
    c << m.var_probe, m.cov, m.cov, m.var_conj;
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(c).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-12 * ev.maxCoeff());
  }
}

TEST_CASE("invalid pairs are rejected") {
  CHECK_THROWS_AS(TwoModeSqueezedPair(0.9, 1.0), DomainError);
  CHECK_THROWS_AS(TwoModeSqueezedPair(2.0, 0.0), DomainError);
  CHECK_THROWS_AS(nrf_paper_eq1(2.0, 0.0), DomainError);
  CHECK_THROWS_AS(nrf_paper_eq1(2.0, 1.5), DomainError);
}

TEST_CASE("reference single-pair formula") {
  // 1 / (0.85 * 24.2) evaluated by hand.
  CHECK(nrf_paper_eq1(12.6, 0.85) == doctest::Approx(1.0 / 20.57).epsilon(1e-14));
  CHECK(to_db(nrf_paper_eq1(12.6, 0.85)) == doctest::Approx(-13.1323).epsilon(1e-5));
  CHECK(nrf_paper_eq1(1.0, 1.0) == 1.0);
}

TEST_CASE("even split of one mode doubles the single-pair value") {
  for (double g : kGains) {
    PaperNoiseInputs in;
    in.gain = g;
    in.total_power = 1.0;
    in.modes = {{1.0, 0.5}};
    CHECK(noise_paper_eq2(in) == doctest::Approx(2.0 * nrf_paper_eq1(g, 1.0)).epsilon(1e-14));
  }
}

TEST_CASE("partition formula rejects inconsistent powers") {
  PaperNoiseInputs in;
  in.gain = 2.0;
  in.total_power = 1.0;
  in.isolated_power = 0.5;
  in.modes = {{0.4, 0.5}};
  CHECK_THROWS_AS(noise_paper_eq2(in), DomainError);
}

TEST_CASE("full detection: covariance engine equals 1/(2G-1) and the lossy closed form") {
  for (double g : kGains)
    for (double eta : {1.0, 0.85, 0.5}) {
      std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(g, 1.0)};
      DetectionAssignment a;
      a.pairs = {{{{"p", eta, +1}}, {{"c", eta, -1}}}};
      const NoiseResult r = nrf_covariance(pairs, a);
      const double expect = 1.0 - eta + eta / (2.0 * g - 1.0);
      CHECK(r.nrf == doctest::Approx(expect).epsilon(1e-13));
      if (eta == 1.0)
        CHECK(r.nrf == doctest::Approx(1.0 / (2.0 * g - 1.0)).epsilon(1e-13));
    }
}

TEST_CASE("closed-form reduction equals w^T C w on random inputs") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> gain(1.0, 20.0), eps(0.0, 0.2);
  for (int trial = 0; trial < 200; ++trial) {
    const PairMoments m = pair_moments(TwoModeSqueezedPair(gain(rng), 0.3 + trial * 0.01));
    const auto probe = random_taps(rng, 1 + trial % 4);
    const auto conj = random_taps(rng, 1 + (trial / 4) % 4);
    const double e = eps(rng);
    const double direct = quadratic_form(m, probe, conj, e);
    const double closed = pair_contribution(m, probe, conj, e).variance;
    CHECK(closed == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("partition covariance is positive semidefinite") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const PairMoments m = pair_moments(TwoModeSqueezedPair(1.0 + trial * 0.2, 1.0));
    const auto probe = random_taps(rng, 3);
    const auto conj = random_taps(rng, 2);
    std::vector<double> tp, tc;
    for (const auto &t : probe)
      tp.push_back(t.transmission);
    for (const auto &t : conj)
      tc.push_back(t.transmission);
    const auto pm = partition_covariance(m, tp, tc);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(pm.cov).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-9 * ev.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("binomial partition of a coherent beam is uncorrelated") {
  const PairMoments m = pair_moments(TwoModeSqueezedPair(1.0, 10.0));
  const std::vector<double> t = {0.3, 0.5};
  const auto pm = partition_covariance(m, t, std::vector<double>{});
  CHECK(pm.cov(0, 1) == doctest::Approx(0.0));
  CHECK(pm.cov(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("partition input validation") {
  const PairMoments m = pair_moments(TwoModeSqueezedPair(2.0, 1.0));
  CHECK_THROWS_AS(partition_covariance(m, std::vector<double>{-0.1}, std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(partition_covariance(m, std::vector<double>{0.6, 0.5}, std::vector<double>{}), DomainError);
}

TEST_CASE("no signed flux means SNL = 0") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(2.0, 1.0)};
  DetectionAssignment a;
  a.pairs = {{{{"p", 1.0, 0}}, {{"c", 1.0, 0}}}};
  try {
    nrf_covariance(pairs, a);
    FAIL("expected DomainError");
  } catch (const DomainError &e) {
    CHECK(std::string(e.what()).find("SNL = 0") != std::string::npos);
  }
}

TEST_CASE("background adds a constant in shot-noise units") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(3.0, 1.0)};
  DetectionAssignment a;
  a.pairs = {{{{"p", 1.0, +1}}, {{"c", 1.0, -1}}}};
  const double base = nrf_covariance(pairs, a).nrf;
  a.background_noise = 0.25;
  CHECK(nrf_covariance(pairs, a).nrf == doctest::Approx(base + 0.25));
}

TEST_CASE("edge scatter vanishes without a cut and adds b/4 at an even split") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(3.0, 1.0)};
  DetectionAssignment a;
  a.edge_scatter = 0.3;
  a.pairs = {{{{"p", 1.0, +1}}, {{"c", 1.0, -1}}}};
  CHECK(nrf_covariance(pairs, a).nrf == doctest::Approx(0.2));
  DetectionAssignment split = a;
  split.pairs = {{{{"A", 0.5, +1}, {"B", 0.5, -1}}, {{"C", 0.5, +1}, {"D", 0.5, -1}}}};
  DetectionAssignment clean = split;
  clean.edge_scatter = 0;
  CHECK(nrf_covariance(pairs, split).nrf - nrf_covariance(pairs, clean).nrf == doctest::Approx(0.075));
}

TEST_CASE("CMRR imbalance leaks classical noise") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(5.0, 1.0)};
  DetectionAssignment a;
  a.pairs = {{{{"p", 1.0, +1}}, {{"c", 1.0, -1}}}};
  const double balanced = nrf_covariance(pairs, a).nrf;
  a.cmrr_imbalance = 0.05;
  CHECK(nrf_covariance(pairs, a).nrf > balanced);
}

TEST_CASE("partition engine: isolated areas and even split") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(2.0, 1.0), TwoModeSqueezedPair(2.0, 1.0)};
  DetectionAssignment a;
  a.pairs = {{{{"A", 1.0, +1}}, {{"C", 1.0, -1}}}, {{{"A", 1.0, +1}}, {{"C", 1.0, -1}}}};
  CHECK(nrf_paper_partition(pairs, a).nrf == doctest::Approx(1.0 / 3.0));
  a.pairs[1] = {{{"A", 0.5, +1}, {"B", 0.5, -1}}, {{"C", 0.5, +1}, {"D", 0.5, -1}}};
  CHECK(nrf_paper_partition(pairs, a).nrf == doctest::Approx(1.0 / (0.5 * 3.0 + 0.5 * 0.5 * 3.0)));
  pairs[1] = TwoModeSqueezedPair(3.0, 1.0);
  CHECK_THROWS_AS(nrf_paper_partition(pairs, a), DomainError);
}

TEST_CASE("Monte-Carlo oracle agrees with the covariance engine") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(1.8, 1.0), TwoModeSqueezedPair(1.3, 0.7)};
  DetectionAssignment a;
  a.pairs = {{{{"A", 0.6, +1}, {"B", 0.4, -1}}, {{"C", 0.3, +1}, {"D", 0.7, -1}}},
             {{{"A", 0.1, +1}, {"B", 0.9, -1}}, {{"C", 0.8, +1}, {"D", 0.2, -1}}}};
  const NoiseResult an = nrf_covariance(pairs, a);
  const NoiseResult mc = monte_carlo_nrf(pairs, a, {200000, 5, 100, 1});
  CHECK(mc.stderr_nrf > 0);
  CHECK(std::abs(mc.nrf - an.nrf) <= 4.0 * mc.stderr_nrf);
}

TEST_CASE("Monte-Carlo is deterministic and thread-count independent") {
  std::vector<TwoModeSqueezedPair> pairs{TwoModeSqueezedPair(2.5, 1.0)};
  DetectionAssignment a;
  a.pairs = {{{{"A", 0.5, +1}, {"B", 0.5, -1}}, {{"C", 0.5, +1}, {"D", 0.5, -1}}}};
  const NoiseResult r1 = monte_carlo_nrf(pairs, a, {20000, 42, 10, 1});
  const NoiseResult r2 = monte_carlo_nrf(pairs, a, {20000, 42, 10, 3});
  const NoiseResult r3 = monte_carlo_nrf(pairs, a, {20000, 43, 10, 1});
  CHECK(r1.nrf == r2.nrf);
  CHECK(r1.stderr_nrf == r2.stderr_nrf);
  CHECK(r1.nrf != r3.nrf);
  CHECK_THROWS(monte_carlo_nrf(pairs, a, {100, 0, 10, 1}));
}
