#pragma once
// Intensity-difference noise of partially detected twin-beam pairs.
//
// Three routes to the same observable:
//   * the reference formulas for a single pair and for equal-gain partitioned
//     modes (nrf_paper_eq1 / noise_paper_eq2 / nrf_paper_partition),
//   * a linearized second-moment engine with exact binomial partition noise
//     (pair_moments / partition_covariance / nrf_covariance),
//   * a seeded Monte-Carlo sampler used as an oracle for the second route.
//
// Fluxes are in arbitrary linear units (photons per detection window); every
// variance is in the same units, so shot noise of a coherent flux N is N.

#include <twinmap/common.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace twinmap {

/// One coherence-area pair produced by four-wave mixing with gain G from a
/// seed of mean flux N0. Probe output carries G*N0, conjugate (G-1)*N0.
struct TwoModeSqueezedPair {
  double gain = 1.0;
  double seed_flux = 1.0;
  std::string id;

  TwoModeSqueezedPair() = default;
  TwoModeSqueezedPair(double gain, double seed_flux, std::string id = {});

  double probe_flux() const { return gain * seed_flux; }
  double conj_flux() const { return (gain - 1.0) * seed_flux; }
};

/// Photon-number moments of one pair at full detection.
struct PairMoments {
  double mean_probe = 0;
  double mean_conj = 0;
  double var_probe = 0;
  double var_conj = 0;
  double cov = 0; ///< Cov(N_probe, N_conj)
};

/// var_Np = G(2G-1)N0, var_Nc = (G-1)(2G-1)N0, cov = 2G(G-1)N0.
/// Chosen so Var(Np - Nc) = N0 for every G.
PairMoments pair_moments(const TwoModeSqueezedPair &pair);

struct NoiseResult {
  double variance = 0;
  double snl = 0;
  double nrf = 0;
  double nrf_db = 0;
  double stderr_nrf = 0;

  /// Builds a result from variance and shot-noise level; throws DomainError
  /// when snl is not positive.
  static NoiseResult from_variance(double variance, double snl, double stderr_nrf = 0.0);
};

double to_db(double linear);

// ---------------------------------------------------------------------------
// Reference formulas

/// 1 / (eta (2G - 1)), exactly as published. This is NOT the lossy-squeezing
/// result of the covariance engine; see nrf_lossy_closed_form.
double nrf_paper_eq1(double gain, double efficiency);

/// 1 - eta + eta/(2G - 1): intensity-difference NRF of one pair with equal
/// detection efficiency on both arms.
double nrf_lossy_closed_form(double gain, double efficiency);

struct PartialMode {
  double power = 0;      ///< power of this mode partially incident on one channel
  double efficiency = 0; ///< includes the attenuation from being split
};

struct PaperNoiseInputs {
  double isolated_power = 0; ///< power in areas that sit wholly on one channel
  double total_power = 0;
  std::vector<PartialMode> modes;
  double detector_efficiency = 1.0;
  double gain = 1.0;
};

/// Equal-gain partition formula:
///   [ (1/P0) (Psw*eta_d*(2G-1) + sum_i P_i*eta_i*(2G-1)) ]^-1
/// Validates Psw + sum P_i = P0 (1e-12 relative).
double noise_paper_eq2(const PaperNoiseInputs &in);

// ---------------------------------------------------------------------------
// Detection assignment

/// One detected portion of an arm: fraction `transmission` of the arm's flux
/// reaches a detector element with sign +1 or -1; sign 0 marks a region that is
/// physically separated from the beam (e.g. sent to a blocked channel) but not
/// used in the signal.
struct RegionTap {
  std::string region_id;
  double transmission = 0;
  int sign = 0;
};

struct PairAssignment {
  std::vector<RegionTap> probe;
  std::vector<RegionTap> conjugate;
};

struct DetectionAssignment {
  std::vector<PairAssignment> pairs; ///< parallel to the pair list
  /// Additive variance in units of the measurement's shot-noise level
  /// (electronics floor, scattered pump).
  double background_noise = 0;
  /// Subtraction gain mismatch: the negative-sign group is weighted by 1 - eps.
  double cmrr_imbalance = 0;
  /// Knife-edge scatter strength in shot-noise units. Scaled by the partition
  /// exposure of the cuts (sum over region pairs of t_r*t_q / (sum t)^2, flux
  /// weighted, averaged over arms), so it vanishes when no edge intersects the
  /// beams and contributes edge_scatter/4 for an even split of every area.
  double edge_scatter = 0;

  void validate(std::size_t n_pairs) const;
};

/// Detected means and covariance over regions of both arms of one pair.
/// Index order: probe regions, then conjugate regions.
struct PartitionMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Binomial partition of each arm over its regions:
///   Var(N_r)        = t_r^2 Var(N) + t_r (1 - t_r) Nbar
///   Cov(N_r, N_q)   = t_r t_q (Var(N) - Nbar)          (same arm, r != q)
///   Cov(Np_r, Nc_q) = t_r t_q Cov(Np, Nc)
/// Throws DomainError on negative t or sum t > 1 + 1e-12 in either arm.
PartitionMoments partition_covariance(const PairMoments &moments,
                                      std::span<const double> probe_t,
                                      std::span<const double> conj_t);

/// Signed tap used by the closed-form reduction.
struct Tap {
  double transmission = 0;
  int sign = 0;
};

/// Closed-form contribution of one pair to the signed photocurrent
/// S = sum_r s_r g_r N_r, where g = 1 for positive and 1 - eps for negative
/// signs. Algebraically equal to w^T C w with C from partition_covariance.
struct PairContribution {
  double variance = 0;
  double snl = 0;
  double probe_flux = 0;     ///< arm mean flux before partition
  double conj_flux = 0;
  double probe_exposure = 0; ///< sum_{r<q} t_r t_q / (sum t)^2 * arm mean flux
  double conj_exposure = 0;
};

PairContribution pair_contribution(const PairMoments &moments, std::span<const Tap> probe,
                                   std::span<const Tap> conj, double cmrr_imbalance);

/// Sums pair contributions and applies background and edge scatter.
NoiseResult combine_contributions(std::span<const PairContribution> parts,
                                  double background_noise, double edge_scatter,
                                  double stderr_nrf = 0.0);

/// Linearized covariance engine. Pairs are independent; total variance is the
/// sum of per-pair quadratic forms. Throws DomainError if SNL = 0.
NoiseResult nrf_covariance(std::span<const TwoModeSqueezedPair> pairs,
                           const DetectionAssignment &assignment);

/// Equal-gain partition formula applied to a detection assignment: an area is
/// isolated when every region it reaches in both arms carries the same sign;
/// otherwise it is a partial mode whose efficiency is the arm-averaged
/// transmission on its dominant sign. Powers are (2G-1) N0. Requires all gains
/// equal (DomainError otherwise). Background and edge scatter are added in
/// shot-noise units the same way as in the covariance engine.
NoiseResult nrf_paper_partition(std::span<const TwoModeSqueezedPair> pairs,
                                const DetectionAssignment &assignment);

// ---------------------------------------------------------------------------
// Monte-Carlo oracle

struct MonteCarloOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;
  std::size_t batches = 100;
  unsigned threads = 1;
};

/// Samples Gaussian pair fluctuations from the 2x2 moment matrix and Gaussian
/// multinomial partition fluctuations per region, accumulating the variance of
/// S. Each batch has its own generator derived from (seed, batch index), so the
/// result does not depend on the thread count. stderr_nrf from batch means.
NoiseResult monte_carlo_nrf(std::span<const TwoModeSqueezedPair> pairs,
                            const DetectionAssignment &assignment,
                            const MonteCarloOptions &options);

} // namespace twinmap
