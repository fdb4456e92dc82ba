#pragma once

// JSON and CSV forms of measures, type B laws, ensemble specs and
// histograms. Data values are written at 9 significant digits.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "typeb/error.hpp"
#include "typeb/measures.hpp"
#include "typeb/rmt.hpp"
#include "typeb/type_b.hpp"

namespace typeb {

using Json = nlohmann::json;

/// x rounded to 9 significant digits (exact text form "%.9g").
inline double round9(double x) {
  if (!std::isfinite(x)) throw NumericalError("cannot serialize a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

inline std::string format9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline Json rounded_array(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(round9(x));
  return a;
}

namespace detail {

inline Json atoms_json(const std::vector<Atom>& atoms) {
  Json a = Json::array();
  for (const Atom& x : atoms) a.push_back({round9(x.location), round9(x.weight)});
  return a;
}

inline std::vector<Atom> atoms_from_json(const Json& j) {
  std::vector<Atom> atoms;
  for (const auto& p : j.value("atoms", Json::array())) {
    if (!p.is_array() || p.size() != 2) throw ConfigError("atoms must be [location, weight] pairs");
    atoms.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return atoms;
}

inline Json grid_json(const GridDensity& g) {
  return {{"t", rounded_array(g.points)}, {"density", rounded_array(g.density)}, {"weights", rounded_array(g.weights)}};
}

inline GridDensity grid_from_json(const Json& g) {
  auto t = g.at("t").get<std::vector<double>>();
  auto d = g.at("density").get<std::vector<double>>();
  if (t.size() != d.size()) throw ConfigError("grid t and density differ in length");
  GridDensity out = trapezoid_grid(std::move(t), std::move(d));
  if (g.contains("weights")) {
    auto w = g.at("weights").get<std::vector<double>>();
    if (w.size() != out.points.size()) throw ConfigError("grid weights differ in length");
    out.weights = std::move(w);
  }
  return out;
}

}  // namespace detail

inline Json to_json(const SignedMeasure& m) {
  Json j{{"atoms", detail::atoms_json(m.atoms())}, {"family", m.grid().empty() ? "none" : "grid"}};
  if (!m.grid().empty()) j["grid"] = detail::grid_json(m.grid());
  return j;
}

inline Json to_json(const Measure& m) {
  Json j{{"atoms", detail::atoms_json(m.atoms())}};
  switch (m.family()) {
    case Family::semicircle: j["family"] = "semicircle"; break;
    case Family::marchenko_pastur:
      j["family"] = "mp";
      j["lambda"] = *m.mp_lambda();
      break;
    case Family::grid:
      j["family"] = "grid";
      j["grid"] = detail::grid_json(m.quadrature());
      break;
    case Family::none: j["family"] = "none"; break;
  }
  return j;
}

inline SignedMeasure signed_measure_from_json(const Json& j) {
  try {
    GridDensity g;
    if (j.contains("grid")) g = detail::grid_from_json(j.at("grid"));
    return SignedMeasure(detail::atoms_from_json(j), std::move(g));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed signed measure JSON: ") + e.what());
  }
}

/// Named families are rebuilt from their parameters; grid densities are
/// rescaled so that rounding in the text form does not break unit mass.
inline Measure measure_from_json(const Json& j) {
  try {
    std::string family = j.value("family", "none");
    if (family == "semicircle") return Measure::semicircle();
    if (family == "mp") return Measure::marchenko_pastur(j.at("lambda").get<double>());
    std::vector<Atom> atoms = detail::atoms_from_json(j);
    double atom_mass = 0.0;
    for (const Atom& a : atoms) atom_mass += a.weight;
    if (family == "grid") {
      GridDensity g = detail::grid_from_json(j.at("grid"));
      double mass = g.integral();
      if (!(mass > 0.0)) throw ConfigError("grid measure has no mass");
      for (double& w : g.weights) w *= (1.0 - atom_mass) / mass;
      return Measure::from_grid(std::move(g), std::move(atoms));
    }
    if (family != "none") throw ConfigError("unknown measure family '" + family + "'");
    for (Atom& a : atoms) a.weight /= atom_mass;
    return Measure::atomic(std::move(atoms));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed measure JSON: ") + e.what());
  }
}

inline Json to_json(const TypeBLaw& law) {
  return {{"law", to_json(law.law)},
          {"correction", to_json(law.correction)},
          {"h", {{"t", rounded_array(law.h.t)}, {"h", rounded_array(law.h.h)}}}};
}

inline TypeBLaw typeb_law_from_json(const Json& j) {
  try {
    TypeBLaw law{measure_from_json(j.at("law")), signed_measure_from_json(j.at("correction")), {}};
    if (j.contains("h")) {
      law.h.t = j.at("h").at("t").get<std::vector<double>>();
      law.h.h = j.at("h").at("h").get<std::vector<double>>();
    }
    return law;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed type B law JSON: ") + e.what());
  }
}

// Ensemble specs hold user input, so they keep full precision.
inline Json to_json(const EnsembleSpec& s) {
  return {{"kind", ensemble_name(s.kind)},
          {"n", s.n},
          {"spikes", s.spikes.thetas},
          {"base_eigenvalues", s.base_eigenvalues},
          {"lambda", s.lambda},
          {"sigma_spikes", s.sigma_spikes.thetas},
          {"seed", s.seed},
          {"trials", s.trials}};
}

inline EnsembleSpec ensemble_from_json(const Json& j) {
  try {
    EnsembleSpec s;
    s.kind = parse_ensemble(j.at("kind").get<std::string>());
    s.n = j.at("n").get<int>();
    s.spikes = SpikeSet(j.value("spikes", std::vector<double>{}));
    s.base_eigenvalues = j.value("base_eigenvalues", std::vector<double>{});
    s.lambda = j.value("lambda", 1.0);
    s.sigma_spikes = SpikeSet(j.value("sigma_spikes", std::vector<double>{}));
    s.seed = j.value("seed", std::uint64_t{0});
    s.trials = j.value("trials", 1);
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed ensemble JSON: ") + e.what());
  }
}

// --- histogram CSV -------------------------------------------------------------

inline std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os << "bin_left,bin_right,mean_count,stderr\n";
  for (std::size_t b = 0; b < h.bins(); ++b)
    os << format9(h.edges[b]) << ',' << format9(h.edges[b + 1]) << ',' << format9(h.mean_counts[b]) << ','
       << format9(h.stderrs[b]) << '\n';
  return os.str();
}

/// Bins, counts and errors from CSV; trials and n are not part of the format.
inline Histogram histogram_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("bin_left,bin_right,mean_count,stderr", 0) != 0)
    throw ConfigError("histogram CSV: missing header");
  Histogram h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("histogram CSV: bad number '" + cell + "'");
      }
    }
    if (v.size() != 4) throw ConfigError("histogram CSV: expected 4 columns");
    if (h.edges.empty())
      h.edges.push_back(v[0]);
    else if (std::abs(h.edges.back() - v[0]) > 1e-9 * std::max(1.0, std::abs(v[0])))
      throw ConfigError("histogram CSV: bins are not contiguous");
    h.edges.push_back(v[1]);
    h.mean_counts.push_back(v[2]);
    h.stderrs.push_back(v[3]);
  }
  if (h.mean_counts.empty()) throw ConfigError("histogram CSV: no bins");
  return h;
}

// --- files -------------------------------------------------------------------

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

}  // namespace typeb
