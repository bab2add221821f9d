#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "etm/config.hpp"

using namespace etm;
using nlohmann::json;

namespace {

std::string word_string(const TileWord& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(w[i]);
  }
  return s;
}

std::string point_csv(const SpherePoint& p) {
  if (p.infinite) return "inf,inf";
  return format_double(p.z.real()) + "," + format_double(p.z.imag());
}

json base_report(const ExperimentConfig& cfg) {
  json j;
  j["tool"] = "etm";
  j["version"] = kVersion;
  j["config"] = config_hash(cfg);
  return j;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return cfg.out_dir + "/" + name;
}

ThermoOptions thermo_options(const ExperimentConfig& cfg) {
  ThermoOptions opts;
  opts.m_pressure = cfg.m_pressure;
  opts.m_grid = cfg.m_grid;
  return opts;
}

int cmd_catalog(const ExperimentConfig& cfg) {
  auto entries = builtin_map_catalog();
  if (!cfg.map_file.empty()) {
    auto extra = load_map_catalog(cfg.map_file);
    entries.insert(entries.end(), extra.begin(), extra.end());
  }
  for (const auto& e : entries) std::cout << e.name << "  " << e.note << "\n";
  return 0;
}

int cmd_tiles(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  if (cfg.map_name != "f0" || !cfg.map_num.empty())
    std::cout << "note: the chordal surrogate is bi-Lipschitz to the visual metric only for "
                 "Lattes maps; metric-sensitive claims are downgraded for this map\n";
  if (!ws.joins_check_passed)
    std::cout << "warning: a 1-tile appears to join opposite sides of C; "
                 "consider --iterate " << cfg.n_iterate + 1 << "\n";

  TileHierarchy hier(*ws.catalog, cfg.level, true);
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "word,side0,re,im,diam_estimate\n";
  const auto& lvl = hier.level(cfg.level);
  for (std::size_t i = 0; i < lvl.first.size(); ++i) {
    TileWord w = hier.word_of(cfg.level, i);
    Side s = ws.catalog->one_tiles()[w.front()].side;
    csv << word_string(w) << "," << (s == Side::Black ? "black" : "white") << ","
        << point_csv(lvl.point[i]) << "," << format_double(lvl.diam[i]) << "\n";
  }
  std::string path = out_path(cfg, "tiles_level" + std::to_string(cfg.level) + ".csv");
  write_file(path, csv.str());
  std::cout << "tiles: level " << cfg.level << ", " << lvl.first.size() << " words -> " << path
            << "\n";
  std::cout << "expansion estimate " << format_double(ws.catalog->expansion_estimate())
            << ", mixing power " << ws.catalog->mixing_power() << "\n";
  return 0;
}

int cmd_orbits(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  OrbitStore store = build_orbit_store(*ws.catalog, cfg.n_max, ws.phi);
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "period,re,im,weighted_length,degree_weight,word,primitive\n";
  for (const auto& o : store.orbits())
    csv << o.period << "," << point_csv(o.representative) << "," << format_double(o.birkhoff) << ","
        << o.degree_weight << "," << word_string(o.word) << "," << (o.primitive ? 1 : 0) << "\n";
  std::string path = out_path(cfg, "orbits.csv");
  write_file(path, csv.str());
  std::cout << "orbits: " << store.orbits().size() << " primitive orbits to period " << cfg.n_max
            << " -> " << path << "\n";
  return 0;
}

int cmd_pressure(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  const RationalMap& f = *ws.map;
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "a,m,p_value\n";
  std::vector<SpherePoint> bases = {ws.catalog->base_point(Side::Black),
                                    ws.catalog->base_point(Side::White),
                                    ws.catalog->probe_points(Side::Black)[1]};
  double max_spread = 0.0;
  for (double a = 0.0; a <= 2.0 + 1e-9; a += 0.1) {
    double p0 = pressure(f, ws.phi, a, cfg.m_pressure, bases[0]);
    double lo = p0, hi = p0;
    for (int b = 1; b < 3; ++b) {
      double p = pressure(f, ws.phi, a, cfg.m_pressure, bases[b]);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    max_spread = std::max(max_spread, hi - lo);
    csv << format_double(a) << "," << cfg.m_pressure << "," << format_double(p0) << "\n";
  }
  std::string path = out_path(cfg, "pressure.csv");
  write_file(path, csv.str());
  std::cout << "pressure curve -> " << path << " (base-point spread " << format_double(max_spread)
            << ")\n";
  return 0;
}

int cmd_s0(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  ThermoSolution sol = solve_thermo(*ws.catalog, ws.phi, thermo_options(cfg));

  Rng rng(cfg.seed);
  TileFunctionR u;
  u.level = cfg.m_grid;
  u.v.resize(sol.grid->hierarchy().words_at(cfg.m_grid));
  for (auto& x : u.v) x = rng.uniform(-1.0, 1.0);
  DecayProbe spectral = spectral_decay_probe(*sol.norm_phi, sol.gibbs, u, 8);
  SplitOperator op(sol.norm_minus_s0, 10.0);
  DecayProbe l2 = l2_decay_probe(op, *sol.norm_minus_s0, 8);

  json j = base_report(cfg);
  j["s0"] = sol.s0;
  j["s0_residual"] = sol.s0_residual;
  j["pressure_monotone"] = sol.pressure_monotone;
  j["positivity_certificate"] = {{"n", sol.certificate.n}, {"margin", sol.certificate.margin}};
  j["eigenfunction_residual"] = sol.cesaro_residual;
  j["eigenfunction_gap"] = sol.eigenfunction_gap;
  j["gibbs_doubling_ratio"] = sol.gibbs.max_doubling_ratio;
  j["spectral_decay_ratio"] = spectral.fitted_ratio;
  j["l2_decay_ratio_im10"] = l2.fitted_ratio;
  std::string path = out_path(cfg, "thermo_report.json");
  write_file(path, j.dump(2) + "\n");
  std::cout << "s0 = " << format_double(sol.s0) << " (residual " << format_double(sol.s0_residual)
            << ") -> " << path << "\n";
  return 0;
}

int cmd_zeta(const ExperimentConfig& cfg, const std::vector<std::string>& s_specs) {
  Workspace ws = make_workspace(cfg);
  auto cert = eventual_positivity(ws.phi, *ws.catalog, 16, 4);
  if (!cert) fail(ErrorKind::PreconditionViolated, "zeta: potential not eventually positive on probes");
  double s0 = solve_s0(*ws.map, ws.phi, cfg.m_pressure, ws.catalog->base_point(Side::Black), *cert);
  OrbitStore store = build_orbit_store(*ws.catalog, cfg.n_max, ws.phi);

  json recs = json::array();
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "s_re,s_im,n,zn_re,zn_im\n";
  std::vector<Complex> ss;
  if (s_specs.empty()) ss.push_back(Complex(s0 + 0.5, 0.0));
  for (const auto& spec : s_specs) {
    double re = 0, im = 0;
    if (std::sscanf(spec.c_str(), "%lf,%lf", &re, &im) < 1)
      fail(ErrorKind::BadInput, "zeta: bad --s value '" + spec + "'");
    ss.push_back(Complex(re, im));
  }
  for (Complex s : ss) {
    ZetaEvaluation ev;
    bool divergence = s.real() <= s0;
    if (divergence) {
      ev.s = s;
      ev.truncation = cfg.n_max;
      for (int n = 1; n <= cfg.n_max; ++n) {
        Complex zn = z_n(store, s, n);
        ev.per_n.push_back(zn);
        ev.log_sum += zn / double(n);
      }
    } else {
      ev = log_zeta_partial(store, s, cfg.n_max);
    }
    for (int n = 1; n <= cfg.n_max; ++n)
      csv << format_double(s.real()) << "," << format_double(s.imag()) << "," << n << ","
          << format_double(ev.per_n[n - 1].real()) << "," << format_double(ev.per_n[n - 1].imag())
          << "\n";
    json r;
    r["s"] = {s.real(), s.imag()};
    r["log_sum"] = {ev.log_sum.real(), ev.log_sum.imag()};
    if (!divergence) {
      r["euler_log"] = {ev.euler_log.real(), ev.euler_log.imag()};
      r["tail_estimate"] = ev.tail_estimate;
      Complex dir = dirichlet_partial(store, s, cfg.n_max);
      r["dirichlet"] = {dir.real(), dir.imag()};
    } else {
      r["flag"] = "divergence region - diagnostic only";
    }
    recs.push_back(r);
  }
  json j = base_report(cfg);
  j["s0"] = s0;
  j["evaluations"] = recs;
  write_file(out_path(cfg, "zeta.json"), j.dump(2) + "\n");
  write_file(out_path(cfg, "zeta_per_n.csv"), csv.str());
  std::cout << "zeta: " << ss.size() << " evaluation(s), s0 = " << format_double(s0) << " -> "
            << out_path(cfg, "zeta.json") << "\n";
  return 0;
}

int cmd_count(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  if (!ws.joins_check_passed)
    std::cout << "warning: joins-opposite-sides check failed; consider a higher --iterate\n";
  auto cert = eventual_positivity(ws.phi, *ws.catalog, 16, 4);
  if (!cert) fail(ErrorKind::PreconditionViolated, "count: potential not eventually positive on probes");
  double s0 = solve_s0(*ws.map, ws.phi, cfg.m_pressure, ws.catalog->base_point(Side::Black), *cert);
  OrbitStore store = build_orbit_store(*ws.catalog, cfg.n_max, ws.phi, std::nullopt, cert);

  std::vector<double> grid;
  double cap = store.certified_length_bound();
  for (double t = cfg.t_lo; t <= std::min(cfg.t_hi, cap) + 1e-12; t += cfg.t_step) grid.push_back(t);
  if (grid.empty()) fail(ErrorKind::PreconditionViolated, "count: empty certified T grid");

  CountReport rep = pot_report(store, s0, grid);
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "T,pi,li,ratio,secondary\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv << format_double(grid[i]) << "," << rep.pi_vals[i] << "," << format_double(rep.li_vals[i])
        << "," << format_double(rep.ratios[i]) << "," << format_double(rep.secondary[i]) << "\n";
  write_file(out_path(cfg, "count.csv"), csv.str());
  write_file(out_path(cfg, "count_ratio.svg"),
             "<!-- " + output_header(cfg).substr(2) + " -->\n" +
                 svg_line_plot(grid, rep.ratios, "pi(T) / Li(e^{s0 T})", 1.0, true));

  json j = base_report(cfg);
  j["s0"] = s0;
  j["iterate"] = cfg.n_iterate;
  j["joins_check_passed"] = ws.joins_check_passed;
  j["certified_T"] = cap;
  j["length_spread"] = rep.length_spread;
  j["oscillation_flagged"] = rep.oscillation_flagged;
  j["remainder_slope"] = rep.remainder_slope;
  write_file(out_path(cfg, "count.json"), j.dump(2) + "\n");
  std::cout << "count: " << grid.size() << " grid points, certified T <= " << format_double(cap)
            << (rep.oscillation_flagged ? " [lattice-length oscillation flagged]" : "") << " -> "
            << out_path(cfg, "count.csv") << "\n";
  return 0;
}

int cmd_sni(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  SniResult res = sni_probe(*ws.catalog, ws.phi, cfg.level, cfg.depth, cfg.samples, cfg.seed);
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "tile_word,separation,best_quotient\n";
  for (const auto& s : res.samples)
    csv << word_string(s.tile_word) << "," << format_double(s.separation) << ","
        << format_double(s.best_quotient) << "\n";
  write_file(out_path(cfg, "sni_samples.csv"), csv.str());
  json j = base_report(cfg);
  j["epsilon_estimate_empirical"] = res.epsilon_estimate;
  j["tile_level"] = cfg.level;
  j["depth"] = cfg.depth;
  j["samples"] = res.samples.size();
  j["note"] = "empirical min-max statistic, not a certified epsilon; a failing probe is inconclusive";
  write_file(out_path(cfg, "sni.json"), j.dump(2) + "\n");
  std::cout << "sni: epsilon_estimate (empirical) = " << format_double(res.epsilon_estimate)
            << " over " << res.samples.size() << " samples -> " << out_path(cfg, "sni.json") << "\n";
  return 0;
}

int cmd_cohom(const ExperimentConfig& cfg) {
  Workspace ws = make_workspace(cfg);
  OrbitStore store = build_orbit_store(*ws.catalog, cfg.n_max, ws.phi);
  CohomResult res = cohomology_probe(store);
  std::ostringstream csv;
  csv << output_header(cfg) << "\n";
  csv << "period,average_length\n";
  for (const auto& o : store.orbits())
    csv << o.period << "," << format_double(o.birkhoff / o.period) << "\n";
  write_file(out_path(cfg, "cohom_samples.csv"), csv.str());
  json j = base_report(cfg);
  j["spread"] = res.spread;
  j["min_average"] = res.min_average;
  j["max_average"] = res.max_average;
  write_file(out_path(cfg, "cohom.json"), j.dump(2) + "\n");
  std::cout << "cohom: spread = " << format_double(res.spread) << " -> " << out_path(cfg, "cohom.json")
            << "\n";
  return 0;
}

int cmd_probe_decay(const ExperimentConfig& cfg, const std::string& s_spec) {
  Workspace ws = make_workspace(cfg);
  ThermoSolution sol = solve_thermo(*ws.catalog, ws.phi, thermo_options(cfg));
  double re = sol.s0, im = 20.0;
  if (!s_spec.empty() && std::sscanf(s_spec.c_str(), "%lf,%lf", &re, &im) < 1)
    fail(ErrorKind::BadInput, "probe-decay: bad --s value");

  Rng rng(cfg.seed);
  TileFunctionR u;
  u.level = cfg.m_grid;
  u.v.resize(sol.grid->hierarchy().words_at(cfg.m_grid));
  for (auto& x : u.v) x = rng.uniform(-1.0, 1.0);
  DecayProbe spectral = spectral_decay_probe(*sol.norm_phi, sol.gibbs, u, 10);

  auto norm_a = (std::fabs(re - sol.s0) < 1e-12)
                    ? sol.norm_minus_s0
                    : std::make_shared<const Normalization>(sol.grid, cfg.m_grid, -re);
  SplitOperator op(norm_a, im);
  DecayProbe l2 = l2_decay_probe(op, *sol.norm_minus_s0, 10);

  json j = base_report(cfg);
  j["s"] = {re, im};
  j["spectral_norms"] = spectral.norms;
  j["spectral_ratio"] = spectral.fitted_ratio;
  j["l2_norms"] = l2.norms;
  j["l2_ratio"] = l2.fitted_ratio;
  write_file(out_path(cfg, "decay.json"), j.dump(2) + "\n");
  std::cout << "probe-decay: spectral ratio " << format_double(spectral.fitted_ratio)
            << ", l2 ratio " << format_double(l2.fitted_ratio) << " -> " << out_path(cfg, "decay.json")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prime-orbit machinery for postcritically finite rational maps"};
  app.require_subcommand(1);
  app.fallthrough();

  ExperimentConfig cfg;
  std::string config_file, tgrid_spec, probe_s;
  std::vector<std::string> zeta_s;

  app.add_option("--config", config_file, "JSON config file (flags override it)");
  auto* o_map = app.add_option("--map", cfg.map_name, "catalog map name");
  auto* o_mapfile = app.add_option("--map-file", cfg.map_file, "extra map catalog (JSON)");
  auto* o_it = app.add_option("--iterate", cfg.n_iterate, "work with F = f^n");
  auto* o_pot = app.add_option("--potential", cfg.potential, "constant:c | smooth[:base[:amp]] | coboundary[:base[:amp]]");
  auto* o_level = app.add_option("--level", cfg.level, "tile level / sni tile level");
  auto* o_depth = app.add_option("--depth", cfg.depth, "backward depth for probes");
  auto* o_nmax = app.add_option("--nmax", cfg.n_max, "maximal orbit period");
  auto* o_mp = app.add_option("--m-pressure", cfg.m_pressure, "pressure tree depth");
  auto* o_mg = app.add_option("--m-grid", cfg.m_grid, "collocation grid level");
  auto* o_samples = app.add_option("--samples", cfg.samples, "sni sample count");
  app.add_option("--tgrid", tgrid_spec, "T grid a:b:step for count");
  auto* o_seed = app.add_option("--seed", cfg.seed, "deterministic seed");
  auto* o_out = app.add_option("--out", cfg.out_dir, "output directory");
  auto* o_verify = app.add_flag("--verify", cfg.verify, "serial reductions, byte-identical output");

  app.add_subcommand("catalog", "list catalog maps");
  app.add_subcommand("tiles", "dump the tile level as CSV");
  app.add_subcommand("orbits", "enumerate primitive periodic orbits");
  app.add_subcommand("pressure", "pressure curve p_m(a)");
  app.add_subcommand("s0", "solve P(f,-s phi) = 0 and write the thermo report");
  auto* sc_zeta = app.add_subcommand("zeta", "partial zeta / Dirichlet / Euler evaluations");
  sc_zeta->add_option("--s", zeta_s, "evaluation points re,im (repeatable)");
  app.add_subcommand("count", "orbit counting against Li(e^{s0 T})");
  app.add_subcommand("sni", "strong non-integrability probe");
  app.add_subcommand("cohom", "orbit-average cohomology probe");
  auto* sc_decay = app.add_subcommand("probe-decay", "spectral and L2 decay probes");
  sc_decay->add_option("--s", probe_s, "complex s as re,im");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_file.empty()) {
      ExperimentConfig file_cfg;
      load_config_file(config_file, file_cfg);
      // flags win over the file
      ExperimentConfig merged = file_cfg;
      if (o_map->count()) merged.map_name = cfg.map_name;
      if (o_mapfile->count()) merged.map_file = cfg.map_file;
      if (o_it->count()) merged.n_iterate = cfg.n_iterate;
      if (o_pot->count()) merged.potential = cfg.potential;
      if (o_level->count()) merged.level = cfg.level;
      if (o_depth->count()) merged.depth = cfg.depth;
      if (o_nmax->count()) merged.n_max = cfg.n_max;
      if (o_mp->count()) merged.m_pressure = cfg.m_pressure;
      if (o_mg->count()) merged.m_grid = cfg.m_grid;
      if (o_samples->count()) merged.samples = cfg.samples;
      if (o_seed->count()) merged.seed = cfg.seed;
      if (o_out->count()) merged.out_dir = cfg.out_dir;
      if (o_verify->count()) merged.verify = cfg.verify;
      cfg = merged;
    }
    if (!tgrid_spec.empty()) {
      auto grid = parse_tgrid(tgrid_spec);
      cfg.t_lo = grid.front();
      cfg.t_hi = grid.back();
      cfg.t_step = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
    }
    set_serial_mode(cfg.verify);

    if (app.got_subcommand("catalog")) return cmd_catalog(cfg);
    if (app.got_subcommand("tiles")) return cmd_tiles(cfg);
    if (app.got_subcommand("orbits")) return cmd_orbits(cfg);
    if (app.got_subcommand("pressure")) return cmd_pressure(cfg);
    if (app.got_subcommand("s0")) return cmd_s0(cfg);
    if (app.got_subcommand("zeta")) return cmd_zeta(cfg, zeta_s);
    if (app.got_subcommand("count")) return cmd_count(cfg);
    if (app.got_subcommand("sni")) return cmd_sni(cfg);
    if (app.got_subcommand("cohom")) return cmd_cohom(cfg);
    if (app.got_subcommand("probe-decay")) return cmd_probe_decay(cfg, probe_s);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::PreconditionViolated:
      case ErrorKind::BadInput:
      case ErrorKind::BudgetExceeded:
        return 2;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
