#include <twinmap/noise.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace twinmap {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_gain(double gain) {
  if (!(gain >= 1.0) || !std::isfinite(gain)) {
    std::ostringstream os;
    os << "gain must be >= 1 (got " << gain << ")";
    throw DomainError(os.str());
  }
}

void check_fractions(std::span<const double> t, const char *arm) {
  double sum = 0;
  for (double v : t) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError(std::string("negative or non-finite transmission on ") + arm + " arm");
    sum += v;
  }
  if (sum > 1.0 + kSumTolerance)
    throw DomainError(std::string("transmissions on ") + arm + " arm sum to more than 1");
}

struct ArmSums {
  double weighted = 0;    // sum w t
  double weighted_sq = 0; // sum w^2 t
  double unsigned_t = 0;  // sum |s| t
  double total_t = 0;     // sum t
  double total_t_sq = 0;  // sum t^2
};

ArmSums arm_sums(std::span<const Tap> taps, double cmrr_imbalance) {
  ArmSums s;
  for (const Tap &tap : taps) {
    const double w = tap.sign > 0 ? 1.0 : (tap.sign < 0 ? -(1.0 - cmrr_imbalance) : 0.0);
    s.weighted += w * tap.transmission;
    s.weighted_sq += w * w * tap.transmission;
    s.unsigned_t += (tap.sign != 0 ? 1.0 : 0.0) * tap.transmission;
    s.total_t += tap.transmission;
    s.total_t_sq += tap.transmission * tap.transmission;
  }
  return s;
}

std::vector<Tap> to_taps(const std::vector<RegionTap> &regions) {
  std::vector<Tap> taps;
  taps.reserve(regions.size());
  for (const auto &r : regions)
    taps.push_back({r.transmission, r.sign});
  return taps;
}

} // namespace

TwoModeSqueezedPair::TwoModeSqueezedPair(double g, double n0, std::string pair_id)
    : gain(g), seed_flux(n0), id(std::move(pair_id)) {
  check_gain(gain);
  if (!(seed_flux > 0.0) || !std::isfinite(seed_flux))
    throw DomainError("seed flux must be positive");
}

PairMoments pair_moments(const TwoModeSqueezedPair &pair) {
  check_gain(pair.gain);
  if (!(pair.seed_flux > 0.0))
    throw DomainError("seed flux must be positive");
  const double g = pair.gain;
  const double n0 = pair.seed_flux;
  PairMoments m;
  m.mean_probe = g * n0;
  m.mean_conj = (g - 1.0) * n0;
  m.var_probe = g * (2.0 * g - 1.0) * n0;
  m.var_conj = (g - 1.0) * (2.0 * g - 1.0) * n0;
  m.cov = 2.0 * g * (g - 1.0) * n0;
  return m;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

NoiseResult NoiseResult::from_variance(double variance, double snl, double stderr_nrf) {
  if (!(snl > 0.0))
    throw DomainError("shot-noise level is zero: no detected flux carries a nonzero sign (SNL = 0)");
  NoiseResult r;
  r.variance = variance;
  r.snl = snl;
  r.nrf = variance / snl;
  r.nrf_db = to_db(r.nrf);
  r.stderr_nrf = stderr_nrf;
  return r;
}

double nrf_paper_eq1(double gain, double efficiency) {
  check_gain(gain);
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw DomainError("efficiency must lie in (0, 1]");
  return 1.0 / (efficiency * (2.0 * gain - 1.0));
}

double nrf_lossy_closed_form(double gain, double efficiency) {
  check_gain(gain);
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw DomainError("efficiency must lie in (0, 1]");
  return 1.0 - efficiency + efficiency / (2.0 * gain - 1.0);
}

double noise_paper_eq2(const PaperNoiseInputs &in) {
  check_gain(in.gain);
  if (!(in.total_power > 0.0))
    throw DomainError("total power must be positive");
  if (!(in.isolated_power >= 0.0))
    throw DomainError("isolated power must be non-negative");
  if (!(in.detector_efficiency >= 0.0 && in.detector_efficiency <= 1.0))
    throw DomainError("detector efficiency must lie in [0, 1]");

  double partial_power = 0;
  double bracket = in.isolated_power * in.detector_efficiency * (2.0 * in.gain - 1.0);
  for (const auto &mode : in.modes) {
    if (!(mode.power >= 0.0))
      throw DomainError("mode power must be non-negative");
    if (!(mode.efficiency >= 0.0 && mode.efficiency <= 1.0))
      throw DomainError("mode efficiency must lie in [0, 1]");
    partial_power += mode.power;
    bracket += mode.power * mode.efficiency * (2.0 * in.gain - 1.0);
  }
  const double total = in.isolated_power + partial_power;
  if (std::abs(total - in.total_power) > kSumTolerance * in.total_power)
    throw DomainError("isolated plus partial power must equal total power");

  bracket /= in.total_power;
  if (!(bracket > 0.0))
    throw DomainError("no detected power: partition noise is undefined");
  return 1.0 / bracket;
}

void DetectionAssignment::validate(std::size_t n_pairs) const {
  if (pairs.size() != n_pairs)
    throw DomainError("detection assignment must reference every pair");
  if (!(background_noise >= 0.0) || !(cmrr_imbalance >= 0.0) || !(edge_scatter >= 0.0))
    throw DomainError("background, edge scatter and CMRR imbalance must be non-negative");
  for (const auto &p : pairs) {
    for (const auto *arm : {&p.probe, &p.conjugate}) {
      double sum = 0;
      for (const auto &r : *arm) {
        if (r.sign < -1 || r.sign > 1)
          throw DomainError("region sign must be -1, 0 or +1");
        if (!(r.transmission >= 0.0) || !std::isfinite(r.transmission))
          throw DomainError("negative or non-finite transmission in region '" + r.region_id + "'");
        sum += r.transmission;
      }
      if (sum > 1.0 + kSumTolerance)
        throw DomainError("region transmissions of one arm sum to more than 1");
    }
  }
}

PartitionMoments partition_covariance(const PairMoments &m, std::span<const double> probe_t,
                                      std::span<const double> conj_t) {
  check_fractions(probe_t, "probe");
  check_fractions(conj_t, "conjugate");

  const auto np = static_cast<Eigen::Index>(probe_t.size());
  const auto nc = static_cast<Eigen::Index>(conj_t.size());
  PartitionMoments out;
  out.mean.resize(np + nc);
  out.cov.setZero(np + nc, np + nc);

  auto fill_arm = [&](std::span<const double> t, Eigen::Index offset, double mean, double var) {
    const auto n = static_cast<Eigen::Index>(t.size());
    for (Eigen::Index r = 0; r < n; ++r) {
      out.mean(offset + r) = t[r] * mean;
      for (Eigen::Index q = 0; q < n; ++q) {
        out.cov(offset + r, offset + q) =
            r == q ? t[r] * t[r] * var + t[r] * (1.0 - t[r]) * mean : t[r] * t[q] * (var - mean);
      }
    }
  };
  fill_arm(probe_t, 0, m.mean_probe, m.var_probe);
  fill_arm(conj_t, np, m.mean_conj, m.var_conj);

  for (Eigen::Index r = 0; r < np; ++r)
    for (Eigen::Index q = 0; q < nc; ++q) {
      const double c = probe_t[r] * conj_t[q] * m.cov;
      out.cov(r, np + q) = c;
      out.cov(np + q, r) = c;
    }
  return out;
}

PairContribution pair_contribution(const PairMoments &m, std::span<const Tap> probe,
                                   std::span<const Tap> conj, double cmrr_imbalance) {
  const ArmSums p = arm_sums(probe, cmrr_imbalance);
  const ArmSums c = arm_sums(conj, cmrr_imbalance);

  PairContribution out;
  out.variance = p.weighted * p.weighted * (m.var_probe - m.mean_probe) +
                 p.weighted_sq * m.mean_probe +
                 c.weighted * c.weighted * (m.var_conj - m.mean_conj) +
                 c.weighted_sq * m.mean_conj + 2.0 * p.weighted * c.weighted * m.cov;
  out.snl = p.unsigned_t * m.mean_probe + c.unsigned_t * m.mean_conj;
  out.probe_flux = m.mean_probe;
  out.conj_flux = m.mean_conj;
  auto exposure = [](const ArmSums &a) {
    return a.total_t > 0 ? 0.5 * (a.total_t * a.total_t - a.total_t_sq) / (a.total_t * a.total_t) : 0.0;
  };
  out.probe_exposure = exposure(p) * m.mean_probe;
  out.conj_exposure = exposure(c) * m.mean_conj;
  return out;
}

namespace {

// Flux-weighted partition exposure averaged over the arms that carry light.
double mean_exposure(std::span<const PairContribution> parts) {
  double pf = 0, cf = 0, pe = 0, ce = 0;
  for (const auto &p : parts) {
    pf += p.probe_flux;
    cf += p.conj_flux;
    pe += p.probe_exposure;
    ce += p.conj_exposure;
  }
  double sum = 0;
  int arms = 0;
  if (pf > 0) {
    sum += pe / pf;
    ++arms;
  }
  if (cf > 0) {
    sum += ce / cf;
    ++arms;
  }
  return arms ? sum / arms : 0.0;
}

} // namespace

NoiseResult combine_contributions(std::span<const PairContribution> parts, double background_noise,
                                  double edge_scatter, double stderr_nrf) {
  double var = 0, snl = 0;
  for (const auto &p : parts) {
    var += p.variance;
    snl += p.snl;
  }
  const double floor = background_noise + (edge_scatter > 0 ? edge_scatter * mean_exposure(parts) : 0.0);
  return NoiseResult::from_variance(var + floor * snl, snl, stderr_nrf);
}

NoiseResult nrf_covariance(std::span<const TwoModeSqueezedPair> pairs,
                           const DetectionAssignment &assignment) {
  assignment.validate(pairs.size());
  std::vector<PairContribution> parts;
  parts.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto probe = to_taps(assignment.pairs[i].probe);
    const auto conj = to_taps(assignment.pairs[i].conjugate);
    parts.push_back(pair_contribution(pair_moments(pairs[i]), probe, conj, assignment.cmrr_imbalance));
  }
  return combine_contributions(parts, assignment.background_noise, assignment.edge_scatter);
}

NoiseResult nrf_paper_partition(std::span<const TwoModeSqueezedPair> pairs,
                                const DetectionAssignment &assignment) {
  assignment.validate(pairs.size());
  if (pairs.empty())
    throw DomainError("no pairs to evaluate");
  const double gain = pairs.front().gain;
  for (const auto &p : pairs)
    if (p.gain != gain)
      throw DomainError("the equal-gain partition formula requires all pairs to share one gain");

  PaperNoiseInputs in;
  in.gain = gain;
  in.detector_efficiency = 1.0;
  double detected_any = 0;
  std::vector<PairContribution> exposure_parts;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto &pa = assignment.pairs[i];
    const double power = (2.0 * gain - 1.0) * pairs[i].seed_flux;
    in.total_power += power;

    // An area is isolated when no arm sends light to both signs. Its
    // efficiency is the arm-averaged transmission on the dominant sign.
    bool isolated = true;
    double dominant = 0;
    for (const auto *arm : {&pa.probe, &pa.conjugate}) {
      double plus = 0, minus = 0;
      for (const auto &r : *arm) {
        if (r.sign > 0)
          plus += r.transmission;
        else if (r.sign < 0)
          minus += r.transmission;
      }
      if (plus > 0 && minus > 0)
        isolated = false;
      dominant += 0.5 * std::max(plus, minus);
    }
    detected_any += dominant;
    if (isolated && dominant == 1.0)
      in.isolated_power += power;
    else
      in.modes.push_back({power, std::min(1.0, dominant)});

    const auto probe = to_taps(pa.probe);
    const auto conj = to_taps(pa.conjugate);
    exposure_parts.push_back(pair_contribution(pair_moments(pairs[i]), probe, conj, 0.0));
  }
  if (!(detected_any > 0))
    throw DomainError("shot-noise level is zero: no detected flux carries a nonzero sign (SNL = 0)");

  const double noise = noise_paper_eq2(in);
  const double floor =
      assignment.background_noise +
      (assignment.edge_scatter > 0 ? assignment.edge_scatter * mean_exposure(exposure_parts) : 0.0);
  // Report in the same units as the covariance engine: SNL = detected flux.
  double snl = 0;
  for (const auto &p : exposure_parts)
    snl += p.snl;
  if (!(snl > 0))
    snl = 1.0;
  return NoiseResult::from_variance((noise + floor) * snl, snl);
}

} // namespace twinmap
