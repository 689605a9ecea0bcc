#include <twinmap/mapfile.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace twinmap {

namespace {

constexpr std::array<const char *, 7> kColumns = {"probe_mm", "conj_mm", "variance", "snl",
                                                  "nrf",      "nrf_db",  "stderr_nrf"};

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep))
    out.push_back(trim(item));
  if (!line.empty() && line.back() == sep)
    out.emplace_back();
  return out;
}

double parse_number(const std::string &text, int line, const std::string &what) {
  double v = 0;
  const char *first = text.data();
  const char *last = first + text.size();
  if (!text.empty() && *first == '+')
    ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    throw InputError("cannot parse " + what + " value '" + text + "'", line);
  return v;
}

std::uint64_t parse_unsigned(const std::string &text, int line, const std::string &what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InputError("cannot parse " + what + " '" + text + "'", line);
  return v;
}

std::uint64_t parse_hex(const std::string &text, int line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw InputError("cannot parse layout_hash '" + text + "'", line);
  return v;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// Settings that travel in comment lines, in output order.
struct Keyed {
  std::string key;
  std::string value;
};

std::vector<Keyed> known_comments(const NoiseMap &m) {
  const ScanSettings &s = m.settings;
  const std::string grid = m.kind == MapKind::raster
                               ? std::to_string(m.probe_coords.size()) + "x" + std::to_string(m.conj_coords.size())
                               : std::to_string(m.values.size());
  return {{"schema", std::to_string(kMapSchemaVersion)},
          {"engine", to_string(s.engine.kind)},
          {"seed", std::to_string(s.engine.seed)},
          {"samples", std::to_string(s.engine.samples)},
          {"layout_hash", hex(m.layout_hash)},
          {"kind", m.kind == MapKind::raster ? "raster" : "sweep"},
          {"grid", grid},
          {"config", s.config.to_string()},
          {"axis", to_string(s.config.sweep_axis)},
          {"efficiency", format_number(s.efficiency)},
          {"background", format_number(s.background)},
          {"cmrr_imbalance", format_number(s.cmrr_imbalance)},
          {"edge_scatter", format_number(s.edge_scatter)},
          {"probe_defocus_cm", format_number(s.probe_defocus.z_offset)},
          {"conj_defocus_cm", format_number(s.conj_defocus.z_offset)}};
}

bool is_known(const std::string &key) {
  static const char *keys[] = {"schema",         "engine",       "seed",       "samples",
                               "layout_hash",    "kind",         "grid",       "config",
                               "axis",           "efficiency",   "background", "cmrr_imbalance",
                               "edge_scatter",   "probe_defocus_cm", "conj_defocus_cm"};
  return std::any_of(std::begin(keys), std::end(keys), [&](const char *k) { return key == k; });
}

// Raster when the rows enumerate a full probe x conjugate grid in row-major order.
bool infer_raster(const std::vector<double> &p, const std::vector<double> &c, std::vector<double> &pu,
                  std::vector<double> &cu) {
  pu.clear();
  cu.clear();
  for (std::size_t i = 0; i < p.size(); ++i)
    if (pu.empty() || p[i] != pu.back())
      pu.push_back(p[i]);
  if (p.size() % pu.size() != 0)
    return false;
  const std::size_t nc = p.size() / pu.size();
  if (nc < 2 && pu.size() < p.size())
    return false;
  cu.assign(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(nc));
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] != pu[k / nc] || c[k] != cu[k % nc])
      return false;
  return nc > 1 || pu.size() == 1;
}

} // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_map(std::ostream &out, const NoiseMapFile &file) {
  const NoiseMap &m = file.map;
  m.validate();
  out << "# twinmap noise map\n";
  for (const auto &kv : known_comments(m))
    out << "# " << kv.key << ": " << kv.value << '\n';
  for (const auto &line : file.extra_comments)
    out << line << '\n';
  for (std::size_t k = 0; k < kColumns.size(); ++k)
    out << (k ? "," : "") << kColumns[k];
  out << '\n';
  for (std::size_t cell = 0; cell < m.values.size(); ++cell) {
    const NoiseResult &r = m.values[cell];
    out << format_number(m.probe_at(cell)) << ',' << format_number(m.conj_at(cell)) << ','
        << format_number(r.variance) << ',' << format_number(r.snl) << ',' << format_number(r.nrf) << ','
        << format_number(r.nrf_db) << ',' << format_number(r.stderr_nrf) << '\n';
  }
}

std::string write_map(const NoiseMapFile &file) {
  std::ostringstream ss;
  write_map(ss, file);
  return ss.str();
}

void save_map(const std::string &path, const NoiseMapFile &file) {
  const std::string text = write_map(file);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write map file '" + path + "'");
  out << text;
  if (!out)
    throw InputError("error writing map file '" + path + "'");
}

NoiseMapFile read_map(std::istream &in) {
  NoiseMapFile file;
  NoiseMap &m = file.map;
  std::map<std::string, std::pair<std::string, int>> meta;
  std::vector<int> column_of(kColumns.size(), -1);
  bool have_header = false;
  std::vector<double> probe, conj;
  std::string raw;
  int line = 0;

  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r')
      raw.pop_back();
    if (trim(raw).empty())
      continue;
    if (raw[0] == '#') {
      if (have_header)
        throw InputError("comment line after the header", line);
      const std::string body = trim(raw.substr(1));
      const auto colon = body.find(':');
      const std::string key = colon == std::string::npos ? std::string() : trim(body.substr(0, colon));
      if (is_known(key))
        meta[key] = {trim(body.substr(colon + 1)), line};
      else if (body != "twinmap noise map")
        file.extra_comments.push_back(raw);
      continue;
    }
    const auto fields = split(raw, ',');
    if (!have_header) {
      have_header = true;
      for (std::size_t f = 0; f < fields.size(); ++f) {
        const auto it = std::find(kColumns.begin(), kColumns.end(), fields[f]);
        if (it == kColumns.end())
          throw InputError("unknown header column '" + fields[f] + "' (expected " +
                               "probe_mm,conj_mm,variance,snl,nrf,nrf_db[,stderr_nrf])",
                           line, static_cast<int>(f + 1));
        const auto k = static_cast<std::size_t>(it - kColumns.begin());
        if (column_of[k] >= 0)
          throw InputError("duplicate header column '" + fields[f] + "'", line, static_cast<int>(f + 1));
        column_of[k] = static_cast<int>(f);
      }
      for (std::size_t k = 0; k + 1 < kColumns.size(); ++k)
        if (column_of[k] < 0)
          throw InputError(std::string("header is missing column '") + kColumns[k] + "'", line);
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(std::count_if(column_of.begin(), column_of.end(),
                                                                [](int c) { return c >= 0; })))
      throw InputError("row has " + std::to_string(fields.size()) + " fields, header has a different count",
                       line);
    auto get = [&](std::size_t k) {
      return column_of[k] < 0 ? 0.0
                              : parse_number(fields[static_cast<std::size_t>(column_of[k])], line, kColumns[k]);
    };
    probe.push_back(get(0));
    conj.push_back(get(1));
    NoiseResult r;
    r.variance = get(2);
    r.snl = get(3);
    r.nrf = get(4);
    r.nrf_db = get(5);
    r.stderr_nrf = get(6);
    m.values.push_back(r);
  }
  if (!have_header)
    throw InputError("map file has no header row");
  if (m.values.empty())
    throw InputError("map file has no data rows");

  // Settings from comments.
  ScanSettings &s = m.settings;
  Axis axis = Axis::x;
  if (auto it = meta.find("axis"); it != meta.end()) {
    if (it->second.first == "x")
      axis = Axis::x;
    else if (it->second.first == "y")
      axis = Axis::y;
    else
      throw InputError("axis must be x or y", it->second.second);
  }
  s.config = ChannelConfig::split(axis);
  for (const auto &[key, entry] : meta) {
    const auto &[value, at] = entry;
    if (key == "schema") {
      if (parse_unsigned(value, at, "schema") != static_cast<std::uint64_t>(kMapSchemaVersion))
        throw InputError("unsupported map schema version " + value, at);
    } else if (key == "engine") {
      try {
        s.engine.kind = parse_engine(value);
      } catch (const InputError &e) {
        throw InputError(e.what(), at);
      }
    } else if (key == "seed") {
      s.engine.seed = parse_unsigned(value, at, "seed");
    } else if (key == "samples") {
      s.engine.samples = parse_unsigned(value, at, "samples");
    } else if (key == "layout_hash") {
      m.layout_hash = parse_hex(value, at);
    } else if (key == "config") {
      try {
        s.config = ChannelConfig::parse(value, axis);
      } catch (const InputError &e) {
        throw InputError(e.what(), at);
      }
    } else if (key == "efficiency") {
      s.efficiency = parse_number(value, at, key);
    } else if (key == "background") {
      s.background = parse_number(value, at, key);
    } else if (key == "cmrr_imbalance") {
      s.cmrr_imbalance = parse_number(value, at, key);
    } else if (key == "edge_scatter") {
      s.edge_scatter = parse_number(value, at, key);
    } else if (key == "probe_defocus_cm") {
      s.probe_defocus.z_offset = parse_number(value, at, key);
    } else if (key == "conj_defocus_cm") {
      s.conj_defocus.z_offset = parse_number(value, at, key);
    }
  }

  std::vector<double> pu, cu;
  const bool grid_ok = infer_raster(probe, conj, pu, cu);
  std::string kind = grid_ok ? "raster" : "sweep";
  if (auto it = meta.find("kind"); it != meta.end()) {
    kind = it->second.first;
    if (kind != "raster" && kind != "sweep")
      throw InputError("kind must be raster or sweep", it->second.second);
    if (kind == "raster" && !grid_ok)
      throw InputError("rows do not form a row-major probe x conjugate grid", it->second.second);
  }
  if (kind == "raster") {
    m.kind = MapKind::raster;
    m.probe_coords = pu;
    m.conj_coords = cu;
  } else {
    m.kind = MapKind::sweep;
    m.probe_coords = probe;
    m.conj_coords = conj;
  }
  if (auto it = meta.find("grid"); it != meta.end()) {
    const std::string expect = m.kind == MapKind::raster
                                   ? std::to_string(pu.size()) + "x" + std::to_string(cu.size())
                                   : std::to_string(m.values.size());
    if (it->second.first != expect)
      throw InputError("grid comment '" + it->second.first + "' does not match the rows (" + expect + ")",
                       it->second.second);
  }
  m.validate();
  return file;
}

NoiseMapFile parse_map(const std::string &text) {
  std::istringstream ss(text);
  return read_map(ss);
}

NoiseMapFile load_map(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot read map file '" + path + "'");
  return read_map(in);
}

} // namespace twinmap
