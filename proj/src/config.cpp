#include "etm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace etm {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["map_name"] = c.map_name;
  j["map_file"] = c.map_file;
  j["map_num"] = c.map_num;
  j["map_den"] = c.map_den;
  j["curve"] = {{"kind", c.curve.kind},
                {"center_re", c.curve.center_re},
                {"center_im", c.curve.center_im},
                {"radius", c.curve.radius}};
  j["n_iterate"] = c.n_iterate;
  j["potential"] = c.potential;
  j["m_pressure"] = c.m_pressure;
  j["m_grid"] = c.m_grid;
  j["k_delta"] = c.k_delta;
  j["n_max"] = c.n_max;
  j["level"] = c.level;
  j["depth"] = c.depth;
  j["samples"] = c.samples;
  j["t_lo"] = c.t_lo;
  j["t_hi"] = c.t_hi;
  j["t_step"] = c.t_step;
  j["seed"] = c.seed;
  j["verify"] = c.verify;
  j["tol"] = {{"root", c.tol.root},       {"cluster", c.tol.cluster}, {"gcd", c.tol.gcd},
              {"orbit", c.tol.orbit},     {"curve", c.tol.curve},     {"branch", c.tol.branch},
              {"dedupe", c.tol.dedupe},   {"pressure", c.tol.pressure}};
  return j;
}

}  // namespace

std::string config_canonical_json(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_canonical_json(cfg))));
  return std::string(buf);
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::BadInput, "config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::BadInput, std::string("config: parse error: ") + e.what());
  }
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j[key].get<std::decay_t<decltype(slot)>>();
  };
  get("map_name", cfg.map_name);
  get("map_file", cfg.map_file);
  get("map_num", cfg.map_num);
  get("map_den", cfg.map_den);
  get("n_iterate", cfg.n_iterate);
  get("potential", cfg.potential);
  get("m_pressure", cfg.m_pressure);
  get("m_grid", cfg.m_grid);
  get("k_delta", cfg.k_delta);
  get("n_max", cfg.n_max);
  get("level", cfg.level);
  get("depth", cfg.depth);
  get("samples", cfg.samples);
  get("t_lo", cfg.t_lo);
  get("t_hi", cfg.t_hi);
  get("t_step", cfg.t_step);
  get("seed", cfg.seed);
  get("verify", cfg.verify);
  if (j.contains("curve")) {
    const auto& c = j["curve"];
    if (c.contains("kind")) cfg.curve.kind = c["kind"].get<std::string>();
    if (c.contains("center_re")) cfg.curve.center_re = c["center_re"].get<double>();
    if (c.contains("center_im")) cfg.curve.center_im = c["center_im"].get<double>();
    if (c.contains("radius")) cfg.curve.radius = c["radius"].get<double>();
  }
  if (j.contains("tol")) {
    const auto& t = j["tol"];
    auto gt = [&](const char* key, double& slot) {
      if (t.contains(key)) slot = t[key].get<double>();
    };
    gt("root", cfg.tol.root);
    gt("cluster", cfg.tol.cluster);
    gt("gcd", cfg.tol.gcd);
    gt("orbit", cfg.tol.orbit);
    gt("curve", cfg.tol.curve);
    gt("branch", cfg.tol.branch);
    gt("dedupe", cfg.tol.dedupe);
    gt("pressure", cfg.tol.pressure);
  }
}

std::vector<MapCatalogEntry> builtin_map_catalog() {
  MapCatalogEntry f0;
  f0.name = "f0";
  f0.num = {"1", "0", "2", "0", "1"};
  f0.den = {"0", "-4", "0", "4"};
  f0.postcritical = {"-1,0", "0,0", "1,0", "inf"};
  f0.note = "(z^2+1)^2 / (4z(z^2-1)), degree 4, postcritical {-1,0,1,inf}";

  MapCatalogEntry deg2;
  deg2.name = "deg2";
  deg2.num = {"-2", "0", "1"};
  deg2.den = {"0", "0", "1"};
  deg2.postcritical = {"-1,0", "1,0", "inf"};
  deg2.note = "(z^2-2) / z^2, degree 2, postcritical {-1,1,inf}";
  return {f0, deg2};
}

std::vector<MapCatalogEntry> load_map_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::BadInput, "map catalog: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::BadInput, std::string("map catalog: parse error: ") + e.what());
  }
  std::vector<MapCatalogEntry> out;
  for (const auto& e : j) {
    MapCatalogEntry m;
    m.name = e.at("name").get<std::string>();
    for (const auto& c : e.at("num")) m.num.push_back(c.get<std::string>());
    for (const auto& c : e.at("den")) m.den.push_back(c.get<std::string>());
    if (e.contains("postcritical"))
      for (const auto& p : e["postcritical"]) m.postcritical.push_back(p.get<std::string>());
    if (e.contains("note")) m.note = e["note"].get<std::string>();
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

Polynomial poly_from_strings(const std::vector<std::string>& coeffs) {
  std::vector<Complex> c;
  for (const auto& s : coeffs) {
    try {
      c.emplace_back(std::stod(s), 0.0);
    } catch (const std::exception&) {
      fail(ErrorKind::BadInput, "map catalog: bad coefficient '" + s + "'");
    }
  }
  return Polynomial(std::move(c));
}

std::vector<double> split_params(const std::string& spec) {
  std::vector<double> out;
  std::size_t pos = spec.find(':');
  while (pos != std::string::npos) {
    std::size_t next = spec.find(':', pos + 1);
    std::string tok = spec.substr(pos + 1, next == std::string::npos ? next : next - pos - 1);
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      fail(ErrorKind::BadInput, "potential: bad parameter '" + tok + "'");
    }
    pos = next;
  }
  return out;
}

}  // namespace

Potential parse_potential(const std::string& spec, std::shared_ptr<const RationalMap> map) {
  std::string name = spec.substr(0, spec.find(':'));
  std::vector<double> p = split_params(spec);
  Potential out;
  if (name == "constant") {
    out = constant_potential(p.empty() ? 1.0 : p[0]);
  } else if (name == "smooth") {
    double base = p.size() > 0 ? p[0] : 1.0;
    double amp = p.size() > 1 ? p[1] : 0.2;
    out = smooth_sample_potential(base, amp);
  } else if (name == "coboundary") {
    double base = p.size() > 0 ? p[0] : 1.0;
    double amp = p.size() > 1 ? p[1] : 1e-5;
    out = coboundary_potential(std::move(map), base, amp);
  } else {
    fail(ErrorKind::BadInput, "potential: unknown spec '" + spec + "'");
  }
  validate_potential(out);
  return out;
}

Workspace make_workspace(const ExperimentConfig& cfg) {
  for (double t : {cfg.tol.root, cfg.tol.cluster, cfg.tol.gcd, cfg.tol.orbit, cfg.tol.curve,
                   cfg.tol.branch, cfg.tol.dedupe, cfg.tol.pressure})
    if (!(t > 0)) fail(ErrorKind::BadInput, "config: tolerances must be positive");
  if (cfg.level < 1 || cfg.depth < 1 || cfg.n_max < 1 || cfg.m_pressure < 1 || cfg.m_grid < 1)
    fail(ErrorKind::BadInput, "config: depths and levels must be >= 1");

  std::vector<MapCatalogEntry> entries = builtin_map_catalog();
  if (!cfg.map_file.empty()) {
    auto extra = load_map_catalog(cfg.map_file);
    entries.insert(entries.end(), extra.begin(), extra.end());
  }
  MapCatalogEntry direct;
  const MapCatalogEntry* entry = nullptr;
  if (!cfg.map_num.empty() || !cfg.map_den.empty()) {
    // explicit coefficients in the config take precedence over the name
    if (cfg.map_num.empty() || cfg.map_den.empty())
      fail(ErrorKind::BadInput, "config: both map_num and map_den are required");
    direct.name = "(coefficients)";
    direct.num = cfg.map_num;
    direct.den = cfg.map_den;
    entry = &direct;
  } else {
    for (const auto& e : entries)
      if (e.name == cfg.map_name) entry = &e;
    if (!entry) fail(ErrorKind::BadInput, "unknown map '" + cfg.map_name + "'");
  }

  Workspace ws;
  ws.base_map = std::make_shared<const RationalMap>(
      RationalMap::create(poly_from_strings(entry->num), poly_from_strings(entry->den), cfg.tol));

  // a declared postcritical set must match the computed one
  if (!entry->postcritical.empty()) {
    std::vector<SpherePoint> declared;
    for (const auto& s : entry->postcritical) {
      if (s == "inf") {
        declared.push_back(SpherePoint::inf());
      } else {
        double re = 0, im = 0;
        if (std::sscanf(s.c_str(), "%lf,%lf", &re, &im) < 1)
          fail(ErrorKind::BadInput, "map catalog: bad postcritical entry '" + s + "'");
        declared.push_back(SpherePoint(re, im));
      }
    }
    const auto& computed = ws.base_map->postcritical_set();
    bool ok = declared.size() == computed.size();
    for (const auto& p : declared) {
      bool found = false;
      for (const auto& q : computed)
        if (chordal_dist(p, q) <= cfg.tol.orbit) found = true;
      ok = ok && found;
    }
    if (!ok)
      fail(ErrorKind::BadInput,
           "map '" + entry->name + "': declared postcritical set disagrees with the computed one");
  }

  if (cfg.n_iterate < 1) fail(ErrorKind::BadInput, "n_iterate must be >= 1");
  ws.map = cfg.n_iterate == 1
               ? ws.base_map
               : std::make_shared<const RationalMap>(ws.base_map->iterate(cfg.n_iterate));

  InvariantCurve curve = InvariantCurve::extended_real_line();
  if (cfg.curve.kind == "circle")
    curve = InvariantCurve::circle(Complex(cfg.curve.center_re, cfg.curve.center_im), cfg.curve.radius);
  else if (cfg.curve.kind != "extended_real_line")
    fail(ErrorKind::BadInput, "unknown curve kind '" + cfg.curve.kind + "'");

  ws.catalog = std::make_shared<TileCatalog>(build_catalog(ws.map, curve));
  ws.joins_check_passed = ws.catalog->no_tile_joins_opposite_sides();
  ws.phi = parse_potential(cfg.potential, ws.map);
  return ws;
}

std::string output_header(const ExperimentConfig& cfg) {
  return std::string("# etm ") + kVersion + " config=" + config_hash(cfg);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::BadInput, "cannot write " + path);
  out << content;
}

std::string svg_line_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::string& title, double reference_line, bool with_reference) {
  const int W = 640, H = 400, ml = 60, mr = 20, mt = 40, mb = 40;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (double x : xs) {
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
  }
  for (double y : ys) {
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
  }
  if (with_reference) {
    ylo = std::min(ylo, reference_line);
    yhi = std::max(yhi, reference_line);
  }
  if (xhi <= xlo) xhi = xlo + 1;
  if (yhi <= ylo) yhi = ylo + 1;
  double ypad = 0.05 * (yhi - ylo);
  ylo -= ypad;
  yhi += ypad;
  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double xv = xlo + k * (xhi - xlo) / 4, yv = ylo + k * (yhi - ylo) / 4;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << format_double(std::round(xv * 100) / 100)
        << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 3
        << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(std::round(yv * 1000) / 1000)
        << "</text>\n";
  }
  if (with_reference)
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(reference_line) << "\" x2=\"" << W - mr
        << "\" y2=\"" << py(reference_line) << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) svg << px(xs[i]) << "," << py(ys[i]) << " ";
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

std::vector<double> parse_tgrid(const std::string& spec) {
  double a, b, step;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0 || b < a)
    fail(ErrorKind::BadInput, "tgrid: expected a:b:step with step > 0, got '" + spec + "'");
  std::vector<double> out;
  for (double t = a; t <= b + 1e-12; t += step) out.push_back(t);
  return out;
}

}  // namespace etm
