#pragma once

// Plain-text experiment configuration: one `key = value` per line, '#' starts a
// comment. Keys prefixed with `full.` only apply under --full-scale.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace monofem {

class config_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string experiment = "adaptive";  // apriori-p | apriori-h | adaptive
  std::string problem = "ex1";
  std::vector<double> epsilons;  // ex2 / ex3 parameter; several values make a sweep
  std::optional<double> poincare;

  std::string mesh = "";  // quad | tri; empty picks quad for a priori runs, tri for adaptive
  int n = 8;              // cells per side of the initial / fixed mesh
  std::string mesh_file;  // adaptive only; overrides n
  std::string nodes = "equispaced";

  int p = 1;
  int p_min = 1;
  int p_max = 6;
  int n_min = 3;  // apriori-h: meshes 2^N x 2^N, N = n_min..n_max
  int n_max = 6;
  std::vector<int> budgets;  // C_p or C_N factors; iteration budget C p or C N
  double tolerance = 1e-14;  // reference run: stop at max_j |A(u^n, phi_j)| <= tolerance
  int reference_cap = 5000;

  std::optional<double> theta;  // defaults to the problem's value
  double refine_fraction = 0.25;
  double derefine_fraction = 0.05;
  int max_meshes = 10;
  int max_inner = 200;
  double target_bound = 0.0;
  double c_i = 1.0;
  bool write_vtk = true;

  std::map<std::string, std::string> full_scale;  // `full.` overrides, unprefixed keys
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw config_error("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

inline int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw config_error("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    return false;
  }
  throw config_error("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

inline void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key.rfind("full.", 0) == 0) {
    ExperimentConfig probe;
    apply_config_value(probe, key.substr(5), value);  // validate early
    c.full_scale[key.substr(5)] = value;
  } else if (key == "experiment") {
    c.experiment = value;
  } else if (key == "problem") {
    c.problem = value;
  } else if (key == "epsilon") {
    c.epsilons.clear();
    for (const auto& s : split_list(value)) {
      c.epsilons.push_back(parse_double(key, s));
    }
  } else if (key == "poincare") {
    c.poincare = parse_double(key, value);
  } else if (key == "mesh") {
    c.mesh = value;
  } else if (key == "n") {
    c.n = parse_int(key, value);
  } else if (key == "mesh_file") {
    c.mesh_file = value;
  } else if (key == "nodes") {
    c.nodes = value;
  } else if (key == "p") {
    c.p = parse_int(key, value);
  } else if (key == "p_min") {
    c.p_min = parse_int(key, value);
  } else if (key == "p_max") {
    c.p_max = parse_int(key, value);
  } else if (key == "n_min") {
    c.n_min = parse_int(key, value);
  } else if (key == "n_max") {
    c.n_max = parse_int(key, value);
  } else if (key == "budgets") {
    c.budgets.clear();
    for (const auto& s : split_list(value)) {
      c.budgets.push_back(parse_int(key, s));
    }
  } else if (key == "tolerance") {
    c.tolerance = parse_double(key, value);
  } else if (key == "reference_cap") {
    c.reference_cap = parse_int(key, value);
  } else if (key == "theta") {
    c.theta = parse_double(key, value);
  } else if (key == "refine_fraction") {
    c.refine_fraction = parse_double(key, value);
  } else if (key == "derefine_fraction") {
    c.derefine_fraction = parse_double(key, value);
  } else if (key == "max_meshes") {
    c.max_meshes = parse_int(key, value);
  } else if (key == "max_inner") {
    c.max_inner = parse_int(key, value);
  } else if (key == "target_bound") {
    c.target_bound = parse_double(key, value);
  } else if (key == "c_i") {
    c.c_i = parse_double(key, value);
  } else if (key == "write_vtk") {
    c.write_vtk = parse_bool(key, value);
  } else {
    throw config_error("config: unknown key '" + key + "'");
  }
}

/// Checks ranges and cross-field consistency; throws config_error.
inline void validate(const ExperimentConfig& c) {
  const auto fail = [](const std::string& msg) { throw config_error("config: " + msg); };
  if (c.experiment != "apriori-p" && c.experiment != "apriori-h" && c.experiment != "adaptive") {
    fail("experiment must be apriori-p, apriori-h or adaptive");
  }
  if (c.problem != "apriori" && c.problem != "ex1" && c.problem != "ex2" && c.problem != "ex3") {
    fail("unknown problem '" + c.problem + "'");
  }
  if (!c.epsilons.empty() && c.problem != "ex2" && c.problem != "ex3") {
    fail("epsilon only applies to ex2 and ex3");
  }
  for (double e : c.epsilons) {
    if (!(e > 0.0)) {
      fail("epsilon must be positive");
    }
  }
  if (c.poincare && !(*c.poincare > 0.0)) {
    fail("poincare must be positive");
  }
  if (!c.mesh.empty() && c.mesh != "quad" && c.mesh != "tri") {
    fail("mesh must be quad or tri");
  }
  if (c.nodes != "equispaced" && c.nodes != "gauss_lobatto") {
    fail("nodes must be equispaced or gauss_lobatto");
  }
  const bool triangles = c.mesh == "tri" || (c.mesh.empty() && c.experiment == "adaptive");
  if (triangles && c.nodes == "gauss_lobatto") {
    fail("gauss_lobatto nodes are available on quads only");
  }
  if (c.n < 1) {
    fail("n must be >= 1");
  }
  if (c.tolerance <= 0.0 || c.reference_cap < 1) {
    fail("tolerance and reference_cap must be positive");
  }
  for (int b : c.budgets) {
    if (b < 1) {
      fail("budgets must be positive integers");
    }
  }
  if (c.experiment == "apriori-p") {
    if (c.p_min < 1 || c.p_max < c.p_min || c.p_max > 8) {
      fail("need 1 <= p_min <= p_max <= 8");
    }
  } else if (c.experiment == "apriori-h") {
    if (c.p < 1 || c.p > 8 || c.n_min < 1 || c.n_max < c.n_min || c.n_max > 10) {
      fail("need 1 <= p <= 8 and 1 <= n_min <= n_max <= 10");
    }
  } else {
    if (c.problem == "apriori") {
      fail("adaptive runs take ex1, ex2 or ex3");
    }
    if (c.mesh == "quad") {
      fail("adaptive runs need a triangle mesh");
    }
    if (c.p < 1 || c.p > 8) {
      fail("need 1 <= p <= 8");
    }
    if (c.theta && !(*c.theta > 0.0)) {
      fail("theta must be positive");
    }
    if (!(c.refine_fraction >= 0.0 && c.refine_fraction < 1.0) ||
        !(c.derefine_fraction >= 0.0 && c.derefine_fraction < 1.0) || c.refine_fraction + c.derefine_fraction > 1.0) {
      fail("fractions must lie in [0, 1) and sum to at most 1");
    }
    if (c.max_meshes < 1 || c.max_inner < 1 || c.target_bound < 0.0 || !(c.c_i > 0.0)) {
      fail("need max_meshes, max_inner >= 1, target_bound >= 0, c_i > 0");
    }
  }
}

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = detail::trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw config_error("config line " + std::to_string(lineno) + ": empty key or value");
    }
    apply_config_value(c, key, value);
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw config_error("cannot open config file '" + path + "'");
  }
  return parse_config(in);
}

/// Applies the `full.` overrides, then the built-in full-scale values for keys the
/// file left alone.
inline ExperimentConfig full_scale(const ExperimentConfig& c) {
  ExperimentConfig out = c;
  out.full_scale.clear();
  std::map<std::string, std::string> values;
  if (c.experiment == "apriori-p") {
    values["n"] = "16";
  } else if (c.experiment == "apriori-h") {
    values["n_max"] = "8";
  } else {
    values["max_meshes"] = "20";
  }
  for (const auto& [k, v] : c.full_scale) {
    values[k] = v;
  }
  for (const auto& [k, v] : values) {
    apply_config_value(out, k, v);
  }
  validate(out);
  return out;
}

/// Round-trips through parse_config.
inline std::string to_text(const ExperimentConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "experiment = " << c.experiment << '\n' << "problem = " << c.problem << '\n';
  if (!c.epsilons.empty()) {
    os << "epsilon = ";
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
      os << (i ? ", " : "") << format_double(c.epsilons[i]);
    }
    os << '\n';
  }
  if (c.poincare) {
    os << "poincare = " << format_double(*c.poincare) << '\n';
  }
  if (!c.mesh.empty()) {
    os << "mesh = " << c.mesh << '\n';
  }
  os << "n = " << c.n << '\n';
  if (!c.mesh_file.empty()) {
    os << "mesh_file = " << c.mesh_file << '\n';
  }
  os << "nodes = " << c.nodes << '\n';
  os << "p = " << c.p << "\np_min = " << c.p_min << "\np_max = " << c.p_max << '\n';
  os << "n_min = " << c.n_min << "\nn_max = " << c.n_max << '\n';
  if (!c.budgets.empty()) {
    os << "budgets = ";
    for (std::size_t i = 0; i < c.budgets.size(); ++i) {
      os << (i ? ", " : "") << c.budgets[i];
    }
    os << '\n';
  }
  os << "tolerance = " << format_double(c.tolerance) << "\nreference_cap = " << c.reference_cap << '\n';
  if (c.theta) {
    os << "theta = " << format_double(*c.theta) << '\n';
  }
  os << "refine_fraction = " << format_double(c.refine_fraction) << '\n'
     << "derefine_fraction = " << format_double(c.derefine_fraction) << '\n'
     << "max_meshes = " << c.max_meshes << "\nmax_inner = " << c.max_inner << '\n'
     << "target_bound = " << format_double(c.target_bound) << "\nc_i = " << format_double(c.c_i) << '\n'
     << "write_vtk = " << (c.write_vtk ? "true" : "false") << '\n';
  for (const auto& [k, v] : c.full_scale) {
    os << "full." << k << " = " << v << '\n';
  }
  return os.str();
}

}  // namespace monofem
