#include <twinmap/scene.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace twinmap {

namespace {

[[noreturn]] void fail(const YAML::Node &node, const std::string &msg) {
  const YAML::Mark m = node.Mark();
  if (m.is_null())
    throw InputError(msg);
  throw InputError(msg, m.line + 1, m.column + 1);
}

void require_map(const YAML::Node &node, const std::string &what) {
  if (!node.IsMap())
    fail(node, what + " must be a mapping");
}

void check_keys(const YAML::Node &node, const std::string &what,
                std::initializer_list<const char *> allowed) {
  require_map(node, what);
  for (const auto &kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; })) {
      std::string list;
      for (const char *a : allowed)
        list += std::string(list.empty() ? "" : ", ") + a;
      fail(kv.first, "unknown key '" + key + "' in " + what + " (allowed: " + list + ")");
    }
  }
}

double as_double(const YAML::Node &node, const std::string &what) {
  if (!node.IsScalar())
    fail(node, what + " must be a number");
  try {
    const double v = node.as<double>();
    if (!std::isfinite(v))
      fail(node, what + " must be finite");
    return v;
  } catch (const YAML::BadConversion &) {
    fail(node, what + " must be a number, got '" + node.Scalar() + "'");
  }
}

double get_double(const YAML::Node &parent, const char *key, double fallback, const std::string &what) {
  const YAML::Node n = parent[key];
  return n ? as_double(n, what + "." + key) : fallback;
}

std::uint64_t as_count(const YAML::Node &node, const std::string &what) {
  const double v = as_double(node, what);
  if (v < 0 || v != std::floor(v) || v > 1e15)
    fail(node, what + " must be a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

std::string as_string(const YAML::Node &node, const std::string &what) {
  if (!node.IsScalar())
    fail(node, what + " must be a string");
  return node.Scalar();
}

Point2 as_point(const YAML::Node &node, const std::string &what) {
  if (!node.IsSequence() || node.size() != 2)
    fail(node, what + " must be a two-element list [x, y]");
  return {as_double(node[0], what + "[0]"), as_double(node[1], what + "[1]")};
}

Axis as_axis(const YAML::Node &node, const std::string &what) {
  const std::string s = as_string(node, what);
  if (s == "x")
    return Axis::x;
  if (s == "y")
    return Axis::y;
  fail(node, what + " must be 'x' or 'y', got '" + s + "'");
}

CoherenceArea parse_area(const YAML::Node &node, std::size_t index) {
  const std::string what = "layout.areas[" + std::to_string(index) + "]";
  check_keys(node, what, {"id", "center", "sigma", "gain", "weight", "conj_shift"});
  CoherenceArea a;
  a.pair.id = node["id"] ? as_string(node["id"], what + ".id") : "area" + std::to_string(index + 1);
  if (!node["center"])
    fail(node, what + " needs a center");
  a.center = as_point(node["center"], what + ".center");
  if (const YAML::Node s = node["sigma"]) {
    if (s.IsSequence()) {
      const Point2 p = as_point(s, what + ".sigma");
      a.sigma_x = p.x;
      a.sigma_y = p.y;
    } else {
      a.sigma_x = a.sigma_y = as_double(s, what + ".sigma");
    }
    if (!(a.sigma_x > 0) || !(a.sigma_y > 0))
      fail(s, what + ".sigma must be positive");
  }
  if (!node["gain"])
    fail(node, what + " needs a gain");
  a.pair.gain = as_double(node["gain"], what + ".gain");
  a.pair.seed_flux = get_double(node, "weight", 1.0, what);
  if (!(a.pair.seed_flux > 0))
    fail(node["weight"], what + ".weight must be positive");
  if (const YAML::Node s = node["conj_shift"])
    a.conj_shift = as_point(s, what + ".conj_shift");
  return a;
}

BeamLayout parse_layout(const YAML::Node &node) {
  check_keys(node, "layout",
             {"pump_center", "conj_scale", "probe_image_z_cm", "conj_image_z_cm", "wavelength_nm", "areas"});
  BeamLayout l;
  if (const YAML::Node p = node["pump_center"])
    l.pump_center = as_point(p, "layout.pump_center");
  l.conj_scale = get_double(node, "conj_scale", l.conj_scale, "layout");
  if (!(l.conj_scale > 0))
    fail(node["conj_scale"], "layout.conj_scale must be positive");
  l.probe_image_z = get_double(node, "probe_image_z_cm", l.probe_image_z, "layout");
  l.conj_image_z = get_double(node, "conj_image_z_cm", l.conj_image_z, "layout");
  l.wavelength_nm = get_double(node, "wavelength_nm", l.wavelength_nm, "layout");
  if (!(l.wavelength_nm > 0))
    fail(node["wavelength_nm"], "layout.wavelength_nm must be positive");
  const YAML::Node areas = node["areas"];
  if (!areas || !areas.IsSequence() || areas.size() == 0)
    fail(areas ? areas : node, "layout.areas must be a nonempty list");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    l.areas.push_back(parse_area(areas[i], i));
    if (!ids.insert(l.areas.back().id()).second)
      fail(areas[i], "duplicate area id '" + l.areas.back().id() + "'");
  }
  return l;
}

std::vector<double> parse_range(const YAML::Node &node, const std::string &what) {
  check_keys(node, what, {"from", "to", "steps"});
  if (!node["from"] || !node["to"] || !node["steps"])
    fail(node, what + " needs from, to and steps");
  const double from = as_double(node["from"], what + ".from");
  const double to = as_double(node["to"], what + ".to");
  const std::uint64_t steps = as_count(node["steps"], what + ".steps");
  if (steps < 1 || steps > 100000)
    fail(node["steps"], what + ".steps must be between 1 and 100000");
  if (steps > 1 && from == to)
    fail(node, what + " needs from != to for more than one step");
  return linspace(from, to, static_cast<std::size_t>(steps));
}

} // namespace

Scene parse_scene(const std::string &text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    throw InputError("scene is not valid YAML: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root || root.IsNull())
    throw InputError("scene file is empty");
  check_keys(root, "scene",
             {"layout", "config", "axis", "scan", "engine", "samples", "seed", "threads", "efficiency",
              "background", "cmrr_imbalance", "edge_scatter"});

  Scene scene;
  if (!root["layout"])
    fail(root, "scene needs a layout");
  scene.layout = parse_layout(root["layout"]);

  ScanSettings &s = scene.plan.settings;
  const Axis axis = root["axis"] ? as_axis(root["axis"], "axis") : Axis::x;
  if (const YAML::Node c = root["config"]) {
    try {
      s.config = ChannelConfig::parse(as_string(c, "config"), axis);
    } catch (const InputError &e) {
      fail(c, e.what());
    }
  } else {
    s.config = ChannelConfig::split(axis);
  }
  s.efficiency = get_double(root, "efficiency", 1.0, "scene");
  if (!(s.efficiency > 0 && s.efficiency <= 1))
    fail(root["efficiency"], "efficiency must lie in (0, 1]");
  s.background = get_double(root, "background", 0.0, "scene");
  s.cmrr_imbalance = get_double(root, "cmrr_imbalance", 0.0, "scene");
  s.edge_scatter = get_double(root, "edge_scatter", 0.0, "scene");
  if (s.background < 0)
    fail(root["background"], "background must be non-negative");
  if (s.edge_scatter < 0)
    fail(root["edge_scatter"], "edge_scatter must be non-negative");
  if (s.cmrr_imbalance < 0 || s.cmrr_imbalance >= 1)
    fail(root["cmrr_imbalance"], "cmrr_imbalance must lie in [0, 1)");
  if (const YAML::Node e = root["engine"]) {
    try {
      s.engine.kind = parse_engine(as_string(e, "engine"));
    } catch (const InputError &err) {
      fail(e, err.what());
    }
  }
  if (const YAML::Node n = root["samples"]) {
    s.engine.samples = as_count(n, "samples");
    if (s.engine.samples < 10000)
      fail(n, "samples must be at least 10000");
  }
  if (const YAML::Node n = root["seed"])
    s.engine.seed = as_count(n, "seed");
  if (const YAML::Node n = root["threads"]) {
    s.engine.threads = static_cast<unsigned>(as_count(n, "threads"));
    if (s.engine.threads < 1)
      fail(n, "threads must be at least 1");
  }

  std::optional<std::vector<double>> probe, conj;
  if (const YAML::Node scan = root["scan"]) {
    check_keys(scan, "scan", {"kind", "probe", "conjugate", "defocus"});
    if (const YAML::Node k = scan["kind"]) {
      const std::string kind = as_string(k, "scan.kind");
      if (kind == "raster")
        scene.kind = MapKind::raster;
      else if (kind == "sweep")
        scene.kind = MapKind::sweep;
      else
        fail(k, "scan.kind must be 'raster' or 'sweep', got '" + kind + "'");
    }
    if (const YAML::Node p = scan["probe"])
      probe = parse_range(p, "scan.probe");
    if (const YAML::Node c = scan["conjugate"]) {
      if (scene.kind == MapKind::sweep)
        fail(c, "scan.conjugate is not used by a sweep (conjugate edges are mirrored)");
      conj = parse_range(c, "scan.conjugate");
    }
    if (const YAML::Node d = scan["defocus"]) {
      check_keys(d, "scan.defocus", {"probe_z_cm", "conj_z_cm"});
      s.probe_defocus.z_offset = get_double(d, "probe_z_cm", 0.0, "scan.defocus");
      s.conj_defocus.z_offset = get_double(d, "conj_z_cm", 0.0, "scan.defocus");
    }
  }

  scene.layout.validate();
  const ScanPlan defaults = default_plan(scene.layout, s);
  scene.plan.probe_positions = probe ? *probe : defaults.probe_positions;
  if (scene.kind == MapKind::raster) {
    scene.plan.conj_positions = conj ? *conj : defaults.conj_positions;
  } else {
    scene.plan.conj_positions.clear();
    for (double e : scene.plan.probe_positions)
      scene.plan.conj_positions.push_back(mirror_edge(e, axis, scene.layout));
  }
  scene.plan.validate();
  return scene;
}

Scene load_scene(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot read scene file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

NoiseMap simulate_scene(const Scene &scene) {
  if (scene.kind == MapKind::raster)
    return run_raster(scene.layout, scene.plan);
  return sweep_1d(scene.layout, scene.plan.probe_positions, scene.plan.settings);
}

} // namespace twinmap
