#include <twinmap/reconstruct.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace twinmap {

namespace {

double to_bounded(double u, ParamBounds b) { return b.lo + (b.hi - b.lo) * 0.5 * (1.0 + std::sin(u)); }

double from_bounded(double x, ParamBounds b) {
  const double s = std::clamp(2.0 * (x - b.lo) / (b.hi - b.lo) - 1.0, -1.0, 1.0);
  return std::asin(s);
}

Axis common_axis(std::span<const NoiseMap> maps) {
  if (maps.empty())
    throw InputError("no noise maps to fit");
  const Axis axis = maps.front().settings.config.sweep_axis;
  for (const auto &m : maps)
    if (m.settings.config.sweep_axis != axis)
      throw InputError("all maps in one fit must share the sweep axis");
  return axis;
}

// Unconstrained parameter vector <-> pair estimates.
class Codec {
public:
  Codec(const FitModel &model, std::size_t k) : m_(model), k_(k) {}

  std::size_t per_pair() const { return 2 + (m_.fit_sigma ? 1 : 0) + (m_.symmetric ? 0 : 1); }
  std::size_t size() const { return k_ * per_pair() + (k_ - 1); }

  std::vector<PairEstimate> decode(std::span<const double> u, Axis axis) const {
    std::vector<PairEstimate> out(k_);
    std::size_t p = 0;
    for (auto &e : out) {
      const double c = to_bounded(u[p++], m_.center);
      (axis == Axis::x ? e.center.x : e.center.y) = c;
      (axis == Axis::x ? e.center.y : e.center.x) = m_.cross_coordinate;
      e.gain = to_bounded(u[p++], m_.gain);
      e.sigma = m_.fit_sigma ? to_bounded(u[p++], m_.sigma) : m_.fixed_sigma;
      e.conj_shift = m_.symmetric ? 0.0 : to_bounded(u[p++], m_.conj_shift);
    }
    // Softmax with the first logit pinned at zero.
    double norm = 1.0;
    std::vector<double> w(k_, 1.0);
    for (std::size_t i = 1; i < k_; ++i) {
      w[i] = std::exp(std::clamp(u[p++], -60.0, 60.0));
      norm += w[i];
    }
    for (std::size_t i = 0; i < k_; ++i)
      out[i].weight = w[i] / norm;
    return out;
  }

  std::vector<double> encode(const std::vector<PairEstimate> &pairs, Axis axis) const {
    std::vector<double> u;
    u.reserve(size());
    for (const auto &e : pairs) {
      u.push_back(from_bounded(e.center.along(axis), m_.center));
      u.push_back(from_bounded(e.gain, m_.gain));
      if (m_.fit_sigma)
        u.push_back(from_bounded(e.sigma, m_.sigma));
      if (!m_.symmetric)
        u.push_back(from_bounded(e.conj_shift, m_.conj_shift));
    }
    const double w0 = std::max(pairs.front().weight, 1e-300);
    for (std::size_t i = 1; i < pairs.size(); ++i)
      u.push_back(std::log(std::max(pairs[i].weight, 1e-300) / w0));
    return u;
  }

private:
  const FitModel &m_;
  std::size_t k_;
};

BeamLayout make_layout(const FitModel &model, Axis axis, const std::vector<PairEstimate> &pairs) {
  BeamLayout l;
  l.pump_center = model.pump_center;
  l.conj_scale = model.conj_scale;
  l.wavelength_nm = model.wavelength_nm;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CoherenceArea a;
    a.center = pairs[i].center;
    a.sigma_x = a.sigma_y = pairs[i].sigma;
    a.pair.gain = pairs[i].gain;
    a.pair.seed_flux = std::max(pairs[i].weight, 1e-300);
    a.pair.id = "pair" + std::to_string(i + 1);
    (axis == Axis::x ? a.conj_shift.x : a.conj_shift.y) = pairs[i].conj_shift;
    l.areas.push_back(std::move(a));
  }
  return l;
}

void canonicalize(std::vector<PairEstimate> &pairs, Axis axis) {
  std::stable_sort(pairs.begin(), pairs.end(), [axis](const PairEstimate &a, const PairEstimate &b) {
    return a.center.along(axis) < b.center.along(axis);
  });
}

bool lexicographically_less(const std::vector<PairEstimate> &a, const std::vector<PairEstimate> &b,
                            Axis axis) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const double va[] = {a[i].center.along(axis), a[i].gain, a[i].sigma, a[i].weight, a[i].conj_shift};
    const double vb[] = {b[i].center.along(axis), b[i].gain, b[i].sigma, b[i].weight, b[i].conj_shift};
    for (int k = 0; k < 5; ++k)
      if (va[k] != vb[k])
        return va[k] < vb[k];
  }
  return a.size() < b.size();
}

} // namespace

void FitModel::validate() const {
  if (pairs < 1)
    throw InputError("fit model needs at least one pair");
  for (const ParamBounds *b : {&center, &sigma, &gain, &conj_shift})
    if (!std::isfinite(b->lo) || !std::isfinite(b->hi) || !(b->lo < b->hi))
      throw InputError("fit bounds must be finite with lo < hi");
  if (gain.lo < 1.0)
    throw DomainError("gain bounds must not go below 1");
  if (sigma.lo <= 0.0)
    throw DomainError("sigma bounds must be positive");
  if (!fit_sigma && !(fixed_sigma > 0.0))
    throw DomainError("fixed sigma must be positive");
  if (!(conj_scale > 0.0) || !(beam_fwhm > 0.0))
    throw DomainError("conj_scale and beam FWHM must be positive");
}

std::size_t FitModel::parameter_count() const {
  return Codec(*this, pairs).size();
}

BeamLayout FitResult::layout(const FitModel &model, Axis axis) const {
  return make_layout(model, axis, pairs);
}

double map_rss(std::span<const NoiseMap> maps, const BeamLayout &layout) {
  double rss = 0;
  std::vector<PairMoments> moments;
  for (const auto &a : layout.areas)
    moments.push_back(pair_moments(a.pair));
  const std::size_t k = layout.areas.size();
  std::vector<PairContribution> parts(k);

  for (const auto &map : maps) {
    const ScanSettings &s = map.settings;
    const Axis axis = s.config.sweep_axis;
    const int sa = sign_of(s.config.a), sb = sign_of(s.config.b);
    const int sc = sign_of(s.config.c), sd = sign_of(s.config.d);
    const std::size_t np = map.probe_coords.size();
    const std::size_t nc = map.conj_coords.size();

    // Below-edge fractions per area and edge.
    std::vector<double> tp(k * np), tc(k * nc);
    for (std::size_t a = 0; a < k; ++a) {
      const auto &area = layout.areas[a];
      for (std::size_t i = 0; i < np; ++i)
        tp[a * np + i] = transmission(area, Region::half_plane(map.probe_coords[i], axis, Side::below),
                                      s.probe_defocus, Arm::probe, layout);
      for (std::size_t j = 0; j < nc; ++j)
        tc[a * nc + j] = transmission(area, Region::half_plane(map.conj_coords[j], axis, Side::below),
                                      s.conj_defocus, Arm::conjugate, layout);
    }

    for (std::size_t cell = 0; cell < map.values.size(); ++cell) {
      const std::size_t i = map.kind == MapKind::raster ? cell / nc : cell;
      const std::size_t j = map.kind == MapKind::raster ? cell % nc : cell;
      for (std::size_t a = 0; a < k; ++a) {
        const double pa = tp[a * np + i];
        const double ca = tc[a * nc + j];
        const Tap probe[2] = {{s.efficiency * pa, sa}, {s.efficiency * (1.0 - pa), sb}};
        const Tap conj[2] = {{s.efficiency * ca, sc}, {s.efficiency * (1.0 - ca), sd}};
        parts[a] = pair_contribution(moments[a], probe, conj, s.cmrr_imbalance);
      }
      double model_db;
      try {
        model_db = combine_contributions(parts, s.background, s.edge_scatter).nrf_db;
      } catch (const DomainError &) {
        return std::numeric_limits<double>::infinity();
      }
      if (!std::isfinite(model_db))
        return std::numeric_limits<double>::infinity();
      const double r = model_db - map.values[cell].nrf_db;
      rss += r * r;
    }
  }
  return rss;
}

FitResult fit_layout(std::span<const NoiseMap> maps, const FitModel &model,
                     const OptimizerOptions &options,
                     std::span<const std::vector<PairEstimate>> warm_starts) {
  model.validate();
  const Axis axis = common_axis(maps);
  std::size_t cells = 0;
  for (const auto &m : maps) {
    m.validate();
    cells += m.values.size();
  }
  const Codec codec(model, model.pairs);
  const std::size_t n_params = codec.size();
  if (model.pairs * 5 + 2 > cells || n_params > cells)
    throw InputError("map has too few cells for " + std::to_string(model.pairs) + " pairs");

  const auto objective = [&](std::span<const double> u) {
    return map_rss(maps, make_layout(model, axis, codec.decode(u, axis)));
  };

  // Start points: warm starts first, then a seeded grid over centers.
  std::vector<std::vector<double>> starts;
  for (const auto &w : warm_starts)
    if (w.size() == model.pairs)
      starts.push_back(codec.encode(w, axis));
  const std::size_t grid = std::max<std::size_t>(1, options.starts_per_pair) * model.pairs;
  const double span = model.center.hi - model.center.lo;
  const double lo = model.center.lo + 0.15 * span;
  const double hi = model.center.hi - 0.15 * span;
  for (std::size_t s = 0; s < grid; ++s) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(model.pairs)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PairEstimate> init(model.pairs);
    std::vector<double> centers(model.pairs);
    for (std::size_t i = 0; i < model.pairs; ++i) {
      // First start: evenly spaced; later starts: stratified jitter.
      const double slot = (static_cast<double>(i) + (s == 0 ? 0.5 : unit(rng))) /
                          static_cast<double>(model.pairs);
      centers[i] = lo + (hi - lo) * slot;
    }
    for (std::size_t i = 0; i < model.pairs; ++i) {
      auto &e = init[i];
      (axis == Axis::x ? e.center.x : e.center.y) = centers[i];
      e.gain = s == 0 ? 1.2 : 1.05 + 0.5 * unit(rng);
      e.sigma = model.fit_sigma ? (s == 0 ? 0.5 * (model.sigma.lo + model.sigma.hi)
                                          : model.sigma.lo + (model.sigma.hi - model.sigma.lo) * (0.2 + 0.6 * unit(rng)))
                                : model.fixed_sigma;
      e.weight = 1.0 / static_cast<double>(model.pairs);
      e.conj_shift = 0.0;
    }
    starts.push_back(codec.encode(init, axis));
  }

  SimplexOptions so;
  so.max_iterations = options.max_iterations;
  so.tolerance = options.tolerance;
  std::vector<SimplexResult> runs(starts.size());

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(starts.size())));
  auto work = [&](unsigned w) {
    for (std::size_t s = w; s < starts.size(); s += workers)
      runs[s] = nelder_mead(objective, starts[s], so);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work, w);
    for (auto &t : pool)
      t.join();
  }

  FitResult best;
  bool have = false;
  std::vector<PairEstimate> best_pairs;
  for (const auto &run : runs) {
    auto pairs = codec.decode(run.x, axis);
    canonicalize(pairs, axis);
    const bool better = !have || run.value < best.rss ||
                        (run.value == best.rss && lexicographically_less(pairs, best_pairs, axis));
    if (better) {
      have = true;
      best.rss = run.value;
      best.iterations = run.iterations;
      best.converged = run.converged && std::isfinite(run.value);
      best_pairs = pairs;
    }
  }
  best.pairs = best_pairs;
  best.cells = cells;
  best.parameters = n_params;
  best.starts = starts.size();
  best.residual = std::sqrt(best.rss / static_cast<double>(cells));
  const double n = static_cast<double>(cells);
  const double floor = options.rms_floor_db * options.rms_floor_db * n;
  best.score = n * std::log(std::max(best.rss, floor) / n) + static_cast<double>(n_params) * std::log(n);
  return best;
}

ModelSelection select_model(std::span<const NoiseMap> maps, const FitModel &model,
                            std::span<const std::size_t> k_range, const OptimizerOptions &options) {
  if (k_range.empty())
    throw InputError("model selection needs at least one K");
  const Axis axis = common_axis(maps);
  std::vector<std::size_t> ks(k_range.begin(), k_range.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  ModelSelection out;
  std::optional<FitResult> previous;
  for (std::size_t k : ks) {
    FitModel m = model;
    m.pairs = k;
    std::vector<std::vector<PairEstimate>> warm;
    if (previous && previous->pairs.size() + 1 == k) {
      // Extra pair with negligible weight in the middle of the beam.
      auto grown = previous->pairs;
      PairEstimate extra;
      (axis == Axis::x ? extra.center.x : extra.center.y) = 0.5 * (m.center.lo + m.center.hi);
      extra.gain = 1.1;
      extra.sigma = m.fit_sigma ? 0.5 * (m.sigma.lo + m.sigma.hi) : m.fixed_sigma;
      extra.weight = 1e-6;
      grown.push_back(extra);
      warm.push_back(grown);
    }
    FitResult fit = fit_layout(maps, m, options, warm);
    out.k_values.push_back(k);
    out.scores.push_back(fit.score);
    out.fits.push_back(fit);
    previous = fit;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.scores.size(); ++i)
    if (out.scores[i] < out.scores[best])
      best = i;
  out.best_k = out.k_values[best];
  return out;
}

double estimate_mode_count(double pump_waist_mm, double wavelength_nm,
                           double acceptance_half_angle_mrad) {
  if (!(pump_waist_mm > 0.0) || !(wavelength_nm > 0.0) || !(acceptance_half_angle_mrad > 0.0))
    throw DomainError("mode count needs positive waist, wavelength and acceptance angle");
  const double diffraction = wavelength_nm * 1e-6 / (std::numbers::pi * pump_waist_mm); // rad
  const double ratio = acceptance_half_angle_mrad * 1e-3 / diffraction;
  return ratio * ratio;
}

} // namespace twinmap
