#include <twinmap/noise.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace twinmap {

namespace {

struct ArmSampler {
  double mean = 0;
  std::vector<double> weight;    // s_r g_r per region
  std::vector<double> sqrt_t;    // per category; last entry is the undetected remainder
  std::vector<double> t;         // per category
};

struct PairSampler {
  // Cholesky factor of [[Vp, C], [C, Vc]].
  double l00 = 0, l10 = 0, l11 = 0;
  ArmSampler probe, conj;
};

ArmSampler make_arm(const std::vector<RegionTap> &regions, double mean, double imbalance) {
  ArmSampler a;
  a.mean = mean;
  double sum = 0;
  for (const auto &r : regions) {
    a.weight.push_back(r.sign > 0 ? 1.0 : (r.sign < 0 ? -(1.0 - imbalance) : 0.0));
    a.t.push_back(r.transmission);
    sum += r.transmission;
  }
  a.t.push_back(std::max(0.0, 1.0 - sum));
  for (double v : a.t)
    a.sqrt_t.push_back(std::sqrt(v));
  return a;
}

// Signed sum of one arm's region fluctuations given the arm fluctuation dn.
// Partition noise is Gaussianized multinomial:
//   Y_r = sqrt(Nbar) (sqrt(t_r) Z_r - t_r sum_k sqrt(t_k) Z_k)
// which has covariance Nbar (diag(t) - t t^T) over all categories.
template <class Rng>
double sample_arm(const ArmSampler &arm, double dn, Rng &rng, std::normal_distribution<double> &normal,
                  std::vector<double> &z) {
  const std::size_t n = arm.t.size();
  z.resize(n);
  double proj = 0;
  for (std::size_t k = 0; k < n; ++k) {
    z[k] = normal(rng);
    proj += arm.sqrt_t[k] * z[k];
  }
  const double root_mean = std::sqrt(arm.mean);
  double s = 0;
  for (std::size_t r = 0; r + 1 < n; ++r) {
    const double region = arm.t[r] * dn + root_mean * (arm.sqrt_t[r] * z[r] - arm.t[r] * proj);
    s += arm.weight[r] * region;
  }
  return s;
}

} // namespace

NoiseResult monte_carlo_nrf(std::span<const TwoModeSqueezedPair> pairs,
                            const DetectionAssignment &assignment,
                            const MonteCarloOptions &options) {
  assignment.validate(pairs.size());
  if (options.samples < 10'000)
    throw DomainError("Monte-Carlo estimate needs at least 1e4 samples");
  if (options.batches < 10 || options.batches > options.samples)
    throw DomainError("Monte-Carlo estimate needs at least 10 batches");

  std::vector<PairSampler> samplers;
  std::vector<PairContribution> analytic_parts; // SNL and exposure are deterministic
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PairMoments m = pair_moments(pairs[i]);
    PairSampler ps;
    ps.l00 = std::sqrt(m.var_probe);
    ps.l10 = ps.l00 > 0 ? m.cov / ps.l00 : 0.0;
    ps.l11 = std::sqrt(std::max(0.0, m.var_conj - ps.l10 * ps.l10));
    ps.probe = make_arm(assignment.pairs[i].probe, m.mean_probe, assignment.cmrr_imbalance);
    ps.conj = make_arm(assignment.pairs[i].conjugate, m.mean_conj, assignment.cmrr_imbalance);
    samplers.push_back(std::move(ps));

    std::vector<Tap> probe, conj;
    for (const auto &r : assignment.pairs[i].probe)
      probe.push_back({r.transmission, r.sign});
    for (const auto &r : assignment.pairs[i].conjugate)
      conj.push_back({r.transmission, r.sign});
    analytic_parts.push_back(pair_contribution(m, probe, conj, assignment.cmrr_imbalance));
  }
  // Zero-variance reference carries SNL and the deterministic floor.
  const NoiseResult reference =
      combine_contributions(analytic_parts, assignment.background_noise, assignment.edge_scatter);
  const double snl = reference.snl;
  double floor_var = reference.variance;
  for (const auto &p : analytic_parts)
    floor_var -= p.variance;

  const std::size_t nb = options.batches;
  std::vector<double> batch_var(nb, 0.0);

  auto run_batch = [&](std::size_t b) {
    const std::size_t n = options.samples / nb + (b < options.samples % nb ? 1 : 0);
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z;
    // Welford accumulation of S.
    double mean = 0, m2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0;
      for (const auto &ps : samplers) {
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const double dnp = ps.l00 * z1;
        const double dnc = ps.l10 * z1 + ps.l11 * z2;
        s += sample_arm(ps.probe, dnp, rng, normal, z);
        s += sample_arm(ps.conj, dnc, rng, normal, z);
      }
      const double delta = s - mean;
      mean += delta / static_cast<double>(k + 1);
      m2 += delta * (s - mean);
    }
    batch_var[b] = m2 / static_cast<double>(n - 1);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(nb)));
  if (workers == 1) {
    for (std::size_t b = 0; b < nb; ++b)
      run_batch(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < nb; b += workers)
          run_batch(b);
      });
    for (auto &t : pool)
      t.join();
  }

  // Pooled variance weighted by batch size; NRF per batch for the standard error.
  double pooled = 0, nrf_mean = 0;
  std::vector<double> batch_nrf(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t n = options.samples / nb + (b < options.samples % nb ? 1 : 0);
    pooled += batch_var[b] * static_cast<double>(n);
    batch_nrf[b] = (batch_var[b] + floor_var) / snl;
    nrf_mean += batch_nrf[b];
  }
  pooled /= static_cast<double>(options.samples);
  nrf_mean /= static_cast<double>(nb);
  double ss = 0;
  for (double v : batch_nrf)
    ss += (v - nrf_mean) * (v - nrf_mean);
  const double stderr_nrf = std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb));

  return NoiseResult::from_variance(pooled + floor_var, snl, stderr_nrf);
}

} // namespace twinmap
