#pragma once
// Inverse problem: recover coherence-area layouts from noise maps.
//
// The forward model is the analytic covariance engine evaluated at each map's
// D-mirror edges with the map's own channel settings. Parameters are mapped to
// an unconstrained O(1) space with x = lo + (hi - lo) (1 + sin u) / 2 and
// relative seed fluxes through a softmax, then fitted with multistart
// Nelder-Mead on the squared nrf_db residual.

#include <twinmap/geometry.hpp>
#include <twinmap/scan.hpp>
#include <twinmap/simplex.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace twinmap {

struct ParamBounds {
  double lo = 0;
  double hi = 1;
};

struct FitModel {
  std::size_t pairs = 1;
  Point2 pump_center;
  double conj_scale = 0.5;
  double wavelength_nm = 795.0;
  /// Conjugate centers are the scaled inversion images of probe centers. When
  /// false each pair also fits a conjugate shift along the sweep axis.
  bool symmetric = true;

  ParamBounds center{-1.2, 1.2}; ///< along the sweep axis, mm
  ParamBounds sigma{0.08, 0.5};  ///< mm
  ParamBounds gain{1.0, 3.0};
  ParamBounds conj_shift{-0.3, 0.3};

  bool fit_sigma = true;
  double fixed_sigma = 0.194; ///< used when fit_sigma is false
  /// Coordinate across the sweep axis; not observable from knife edges along it.
  double cross_coordinate = 0.0;
  /// Beam FWHM used to scale centers and report center errors.
  double beam_fwhm = 1.6;

  void validate() const;
  /// Free parameters: per pair center, gain, (sigma), (shift), plus K-1 weights.
  std::size_t parameter_count() const;
};

struct PairEstimate {
  Point2 center;
  double sigma = 0;
  double gain = 1;
  double weight = 0; ///< relative seed flux, weights sum to 1
  double conj_shift = 0;
};

struct FitResult {
  std::vector<PairEstimate> pairs; ///< sorted by center along the sweep axis
  double residual = 0;             ///< RMS nrf_db error over all cells, dB
  double rss = 0;
  std::size_t cells = 0;
  std::size_t parameters = 0;
  std::size_t iterations = 0;
  std::size_t starts = 0;
  bool converged = false;
  double score = 0; ///< Bayesian information criterion

  /// Rebuilds a layout (axis = the maps' sweep axis).
  BeamLayout layout(const FitModel &model, Axis axis) const;
};

struct OptimizerOptions {
  std::size_t starts_per_pair = 5;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// RMS floor applied inside the information criterion (dB). Keeps noiseless
  /// fits from rewarding round-off.
  double rms_floor_db = 1e-3;
};

/// Sum of squared nrf_db residuals of `layout` against the maps.
double map_rss(std::span<const NoiseMap> maps, const BeamLayout &layout);

/// Multistart simplex fit. `warm_starts` are tried in addition to the grid.
FitResult fit_layout(std::span<const NoiseMap> maps, const FitModel &model,
                     const OptimizerOptions &options,
                     std::span<const std::vector<PairEstimate>> warm_starts = {});

struct ModelSelection {
  std::size_t best_k = 0;
  std::vector<std::size_t> k_values;
  std::vector<double> scores;
  std::vector<FitResult> fits;
};

/// Fits each K (ascending, warm-starting K+1 from the best K with an extra
/// pair) and returns the BIC minimizer; ties go to the smaller K.
ModelSelection select_model(std::span<const NoiseMap> maps, const FitModel &model,
                            std::span<const std::size_t> k_range, const OptimizerOptions &options);

/// (theta_acc / theta_d)^2 with theta_d = lambda / (pi w_pump). An
/// order-of-magnitude count of transverse modes inside the angular acceptance.
double estimate_mode_count(double pump_waist_mm, double wavelength_nm,
                           double acceptance_half_angle_mrad);

} // namespace twinmap
