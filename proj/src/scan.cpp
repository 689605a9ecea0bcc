#include <twinmap/scan.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace twinmap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

bool strictly_monotone(const std::vector<double> &v) {
  if (v.size() < 2)
    return true;
  const bool up = v[1] > v[0];
  for (std::size_t i = 1; i < v.size(); ++i)
    if (up ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1]))
      return false;
  return true;
}

std::string upper(std::string s) {
  for (auto &c : s)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <class F> void parallel_for(std::size_t n, unsigned threads, F &&body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers)
          body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
      }
    });
  for (auto &t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace

int sign_of(ModeState s) {
  switch (s) {
  case ModeState::plus:
    return 1;
  case ModeState::minus:
    return -1;
  case ModeState::blocked:
    return 0;
  }
  return 0;
}

ChannelConfig ChannelConfig::split(Axis axis) {
  return {ModeState::plus, ModeState::minus, ModeState::plus, ModeState::minus, axis};
}

ChannelConfig ChannelConfig::ad_only(Axis axis) {
  return {ModeState::plus, ModeState::blocked, ModeState::blocked, ModeState::minus, axis};
}

ChannelConfig ChannelConfig::bc_only(Axis axis) {
  return {ModeState::blocked, ModeState::plus, ModeState::minus, ModeState::blocked, axis};
}

ChannelConfig ChannelConfig::all_diff(Axis axis) {
  return {ModeState::plus, ModeState::plus, ModeState::minus, ModeState::minus, axis};
}

ChannelConfig ChannelConfig::parse(const std::string &text, Axis axis) {
  const std::string name = upper(trim(text));
  if (name == "SPLIT")
    return split(axis);
  if (name == "AD_ONLY")
    return ad_only(axis);
  if (name == "BC_ONLY")
    return bc_only(axis);
  if (name == "ALL_DIFF")
    return all_diff(axis);

  ChannelConfig cfg{ModeState::blocked, ModeState::blocked, ModeState::blocked, ModeState::blocked,
                    axis};
  bool seen[4] = {false, false, false, false};
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw InputError("channel entry '" + trim(item) + "' is not of the form MODE=STATE");
    const std::string mode = upper(trim(item.substr(0, eq)));
    const std::string state = upper(trim(item.substr(eq + 1)));
    ModeState s;
    if (state == "+1" || state == "1" || state == "+")
      s = ModeState::plus;
    else if (state == "-1" || state == "-")
      s = ModeState::minus;
    else if (state == "BLOCKED" || state == "0")
      s = ModeState::blocked;
    else
      throw InputError("unknown channel state '" + state + "' for mode " + mode);
    if (mode.size() != 1 || mode[0] < 'A' || mode[0] > 'D')
      throw InputError("unknown channel mode '" + mode + "' (expected A, B, C or D)");
    const int k = mode[0] - 'A';
    if (seen[k])
      throw InputError("channel mode " + mode + " given twice");
    seen[k] = true;
    (k == 0 ? cfg.a : k == 1 ? cfg.b : k == 2 ? cfg.c : cfg.d) = s;
  }
  if (!(seen[0] && seen[1] && seen[2] && seen[3]))
    throw InputError("channel configuration '" + trim(text) +
                     "' must be a preset or assign all of A, B, C and D");
  return cfg;
}

std::string ChannelConfig::to_string() const {
  auto f = [](ModeState s) -> const char * {
    switch (s) {
    case ModeState::plus:
      return "+1";
    case ModeState::minus:
      return "-1";
    case ModeState::blocked:
      return "blocked";
    }
    return "blocked";
  };
  std::string out = "A=";
  out += f(a);
  out += ",B=";
  out += f(b);
  out += ",C=";
  out += f(c);
  out += ",D=";
  out += f(d);
  return out;
}

void ChannelConfig::validate() const {
  if (a == ModeState::blocked && b == ModeState::blocked && c == ModeState::blocked &&
      d == ModeState::blocked)
    throw DomainError("every channel mode is blocked: shot-noise level is zero (SNL = 0)");
}

const char *to_string(EngineKind kind) {
  switch (kind) {
  case EngineKind::analytic:
    return "analytic";
  case EngineKind::monte_carlo:
    return "monte_carlo";
  case EngineKind::paper:
    return "paper";
  }
  return "analytic";
}

EngineKind parse_engine(const std::string &text) {
  if (text == "analytic")
    return EngineKind::analytic;
  if (text == "monte_carlo")
    return EngineKind::monte_carlo;
  if (text == "paper")
    return EngineKind::paper;
  throw InputError("unknown engine '" + text + "' (expected analytic, monte_carlo or paper)");
}

void ScanPlan::validate() const {
  if (probe_positions.empty() || conj_positions.empty())
    throw InputError("scan plan position lists must be nonempty");
  if (!strictly_monotone(probe_positions) || !strictly_monotone(conj_positions))
    throw InputError("scan plan positions must be strictly monotone");
}

double NoiseMap::probe_at(std::size_t cell) const {
  return kind == MapKind::raster ? probe_coords[cell / conj_coords.size()] : probe_coords[cell];
}

double NoiseMap::conj_at(std::size_t cell) const {
  return kind == MapKind::raster ? conj_coords[cell % conj_coords.size()] : conj_coords[cell];
}

void NoiseMap::validate() const {
  if (values.empty())
    throw InputError("noise map is empty");
  if (kind == MapKind::raster) {
    if (values.size() != probe_coords.size() * conj_coords.size())
      throw InputError("raster dimensions do not match the number of cells");
  } else if (probe_coords.size() != values.size() || conj_coords.size() != values.size()) {
    throw InputError("sweep coordinates do not match the number of cells");
  }
}

DetectionAssignment build_assignment(const BeamLayout &layout, double probe_edge, double conj_edge,
                                     const ScanSettings &s) {
  const Axis axis = s.config.sweep_axis;
  const Region a = Region::half_plane(probe_edge, axis, Side::below);
  const Region b = Region::half_plane(probe_edge, axis, Side::above);
  const Region c = Region::half_plane(conj_edge, axis, Side::below);
  const Region d = Region::half_plane(conj_edge, axis, Side::above);

  DetectionAssignment out;
  out.background_noise = s.background;
  out.cmrr_imbalance = s.cmrr_imbalance;
  out.edge_scatter = s.edge_scatter;
  out.pairs.reserve(layout.areas.size());
  for (const auto &area : layout.areas) {
    PairAssignment pa;
    pa.probe = {
        {"A", s.efficiency * transmission(area, a, s.probe_defocus, Arm::probe, layout), sign_of(s.config.a)},
        {"B", s.efficiency * transmission(area, b, s.probe_defocus, Arm::probe, layout), sign_of(s.config.b)}};
    pa.conjugate = {
        {"C", s.efficiency * transmission(area, c, s.conj_defocus, Arm::conjugate, layout), sign_of(s.config.c)},
        {"D", s.efficiency * transmission(area, d, s.conj_defocus, Arm::conjugate, layout), sign_of(s.config.d)}};
    out.pairs.push_back(std::move(pa));
  }
  return out;
}

NoiseResult measure(const BeamLayout &layout, double probe_edge, double conj_edge,
                    const ScanSettings &settings, std::size_t cell) {
  settings.config.validate();
  const auto pairs = layout.pairs();
  const DetectionAssignment assignment = build_assignment(layout, probe_edge, conj_edge, settings);
  switch (settings.engine.kind) {
  case EngineKind::analytic:
    return nrf_covariance(pairs, assignment);
  case EngineKind::paper:
    return nrf_paper_partition(pairs, assignment);
  case EngineKind::monte_carlo: {
    MonteCarloOptions mc;
    mc.samples = settings.engine.samples;
    mc.seed = splitmix64(settings.engine.seed ^ splitmix64(cell));
    mc.batches = 100;
    mc.threads = 1;
    return monte_carlo_nrf(pairs, assignment, mc);
  }
  }
  throw DomainError("unknown engine");
}

std::vector<double> linspace(double from, double to, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = from;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

ScanPlan default_plan(const BeamLayout &layout, const ScanSettings &settings,
                      std::size_t probe_steps, std::size_t conj_steps) {
  const Axis axis = settings.config.sweep_axis;
  const double pc = beam_centroid(layout, Arm::probe, axis);
  const double ps = beam_sigma(layout, Arm::probe, axis);
  const double cc = beam_centroid(layout, Arm::conjugate, axis);
  const double cs = beam_sigma(layout, Arm::conjugate, axis);
  ScanPlan plan;
  plan.probe_positions = linspace(pc - 2.5 * ps, pc + 2.5 * ps, probe_steps);
  plan.conj_positions = linspace(cc - 2.5 * cs, cc + 2.5 * cs, conj_steps);
  plan.settings = settings;
  return plan;
}

NoiseMap run_raster(const BeamLayout &layout, const ScanPlan &plan) {
  layout.validate();
  plan.validate();
  plan.settings.config.validate();

  NoiseMap map;
  map.kind = MapKind::raster;
  map.probe_coords = plan.probe_positions;
  map.conj_coords = plan.conj_positions;
  map.settings = plan.settings;
  map.layout_hash = layout.fingerprint();
  map.values.resize(map.probe_coords.size() * map.conj_coords.size());

  const std::size_t nc = map.conj_coords.size();
  parallel_for(map.values.size(), plan.settings.engine.threads, [&](std::size_t cell) {
    map.values[cell] = measure(layout, map.probe_coords[cell / nc], map.conj_coords[cell % nc],
                               plan.settings, cell);
  });
  return map;
}

std::vector<ProfilePoint> optimal_profile(const NoiseMap &map, Arm axis) {
  map.validate();
  if (map.kind != MapKind::raster)
    throw InputError("optimal profile needs a raster map");
  const std::size_t np = map.probe_coords.size();
  const std::size_t nc = map.conj_coords.size();
  std::vector<ProfilePoint> out;
  if (axis == Arm::probe) {
    for (std::size_t i = 0; i < np; ++i) {
      ProfilePoint p{map.probe_coords[i], std::numeric_limits<double>::infinity(), 0};
      for (std::size_t j = 0; j < nc; ++j)
        if (map.at(i, j).nrf_db < p.nrf_db) {
          p.nrf_db = map.at(i, j).nrf_db;
          p.argmin_other = map.conj_coords[j];
        }
      out.push_back(p);
    }
  } else {
    for (std::size_t j = 0; j < nc; ++j) {
      ProfilePoint p{map.conj_coords[j], std::numeric_limits<double>::infinity(), 0};
      for (std::size_t i = 0; i < np; ++i)
        if (map.at(i, j).nrf_db < p.nrf_db) {
          p.nrf_db = map.at(i, j).nrf_db;
          p.argmin_other = map.probe_coords[i];
        }
      out.push_back(p);
    }
  }
  return out;
}

double unsplit_probe_edge(const BeamLayout &layout, Axis axis) {
  double edge = -std::numeric_limits<double>::infinity();
  for (const auto &a : layout.areas) {
    const double shift = std::abs(a.conj_shift.along(axis)) / layout.conj_scale;
    edge = std::max(edge, a.center.along(axis) + 8.0 * a.sigma(axis) + shift);
  }
  return edge;
}

AxialSweep axial_sweep(const BeamLayout &layout, const std::vector<double> &z_values, Arm arm,
                       const ScanSettings &settings, std::optional<double> probe_edge,
                       std::optional<double> conj_edge) {
  layout.validate();
  if (z_values.empty())
    throw InputError("axial sweep needs at least one z value");
  const Axis axis = settings.config.sweep_axis;
  const double pe = probe_edge.value_or(layout.pump_center.along(axis));
  const double ce = conj_edge.value_or(mirror_edge(pe, axis, layout));

  AxialSweep out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z_values.size(); ++k) {
    ScanSettings s = settings;
    (arm == Arm::probe ? s.probe_defocus : s.conj_defocus).z_offset = z_values[k];
    AxialPoint p{z_values[k], measure(layout, pe, ce, s, k)};
    if (p.noise.nrf < best) {
      best = p.noise.nrf;
      out.argmin_z = p.z;
    }
    out.curve.push_back(p);
  }
  return out;
}

NoiseMap sweep_1d(const BeamLayout &layout, const std::vector<double> &positions,
                  const ScanSettings &settings) {
  layout.validate();
  settings.config.validate();
  if (positions.empty())
    throw InputError("sweep needs at least one position");
  const Axis axis = settings.config.sweep_axis;

  NoiseMap map;
  map.kind = MapKind::sweep;
  map.settings = settings;
  map.layout_hash = layout.fingerprint();
  map.probe_coords = positions;
  for (double e : positions)
    map.conj_coords.push_back(mirror_edge(e, axis, layout));
  map.values.resize(positions.size());
  parallel_for(positions.size(), settings.engine.threads, [&](std::size_t k) {
    map.values[k] = measure(layout, map.probe_coords[k], map.conj_coords[k], settings, k);
  });
  return map;
}

} // namespace twinmap
