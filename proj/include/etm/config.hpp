#pragma once

#include <map>
#include <memory>
#include <string>

#include "etm/counting.hpp"
#include "etm/nli.hpp"
#include "etm/thermo.hpp"
#include "etm/zeta.hpp"

namespace etm {

struct CurveSpec {
  std::string kind = "extended_real_line";  // or "circle"
  double center_re = 0.0, center_im = 0.0;
  double radius = 1.0;
};

struct ExperimentConfig {
  std::string map_name = "f0";
  std::string map_file;  // optional extra catalog (JSON)
  std::vector<std::string> map_num, map_den;  // explicit coefficients override the name
  CurveSpec curve;
  int n_iterate = 1;
  std::string potential = "smooth";  // constant:c | smooth[:base[:amp]] | coboundary[:base[:amp]]
  int m_pressure = 8;
  int m_grid = 6;
  int k_delta = 12;
  int n_max = 8;
  int level = 3;
  int depth = 8;
  int samples = 12;
  double t_lo = 3.0, t_hi = 7.0, t_step = 0.5;
  Tolerances tol;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  bool verify = false;
};

// Canonical serialized form of the config (sorted keys) and its FNV-1a hash.
std::string config_canonical_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

void load_config_file(const std::string& path, ExperimentConfig& cfg);

struct MapCatalogEntry {
  std::string name;
  std::vector<std::string> num, den;  // decimal strings, lowest degree first
  std::vector<std::string> postcritical;  // optional declared set: "re,im" or "inf"
  std::string note;
};

std::vector<MapCatalogEntry> builtin_map_catalog();
std::vector<MapCatalogEntry> load_map_catalog(const std::string& path);

struct Workspace {
  std::shared_ptr<const RationalMap> base_map;
  std::shared_ptr<const RationalMap> map;  // base_map^n_iterate
  std::shared_ptr<TileCatalog> catalog;
  Potential phi;
  bool joins_check_passed = false;
};

Workspace make_workspace(const ExperimentConfig& cfg);

Potential parse_potential(const std::string& spec, std::shared_ptr<const RationalMap> map);

// Shortest round-trip decimal form of a double ('.' decimal point).
std::string format_double(double x);

// First line embedded into every output file: version + config hash.
std::string output_header(const ExperimentConfig& cfg);

void write_file(const std::string& path, const std::string& content);

std::string svg_line_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::string& title, double reference_line = 0.0,
                          bool with_reference = false);

std::vector<double> parse_tgrid(const std::string& spec);  // "a:b:step"

}  // namespace etm
