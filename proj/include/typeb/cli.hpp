#pragma once

// Command-line surface: predict, simulate, compare, moments.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <boost/math/special_functions/gamma.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "typeb/infinitesimal.hpp"
#include "typeb/rmt.hpp"
#include "typeb/serialization.hpp"
#include "typeb/type_b.hpp"

namespace typeb {

// --- run configuration -------------------------------------------------------

struct RunConfig {
  std::string subcommand;
  // predict
  std::string base = "semicircle";  ///< semicircle | goe-semicircle | atomic | mp
  std::vector<double> atoms;        ///< atomic base: uniform atoms
  std::vector<double> spikes;
  double lambda = 1.0;
  int n = 100;
  int grid_points = static_cast<int>(kDefaultGridPoints);
  int points = 801;
  // simulate, moments
  EnsembleSpec ensemble;
  int bins = 60;
  std::vector<double> range;  ///< [lo, hi]; empty until resolved
  // compare
  std::string prediction_dir;
  std::string simulation_dir;
  // moments
  std::string word;
  std::string out_dir;

  bool operator==(const RunConfig& o) const { return to_json() == o.to_json(); }

  Json to_json() const {
    return {{"subcommand", subcommand},
            {"base", base},
            {"atoms", atoms},
            {"spikes", spikes},
            {"lambda", lambda},
            {"n", n},
            {"grid_points", grid_points},
            {"points", points},
            {"ensemble", typeb::to_json(ensemble)},
            {"bins", bins},
            {"range", range},
            {"prediction_dir", prediction_dir},
            {"simulation_dir", simulation_dir},
            {"word", word},
            {"out_dir", out_dir}};
  }

  static RunConfig from_json(const Json& j) {
    try {
      RunConfig c;
      c.subcommand = j.at("subcommand").get<std::string>();
      c.base = j.at("base").get<std::string>();
      c.atoms = j.at("atoms").get<std::vector<double>>();
      c.spikes = j.at("spikes").get<std::vector<double>>();
      c.lambda = j.at("lambda").get<double>();
      c.n = j.at("n").get<int>();
      c.grid_points = j.at("grid_points").get<int>();
      c.points = j.at("points").get<int>();
      c.ensemble = ensemble_from_json(j.at("ensemble"));
      c.bins = j.at("bins").get<int>();
      c.range = j.at("range").get<std::vector<double>>();
      c.prediction_dir = j.at("prediction_dir").get<std::string>();
      c.simulation_dir = j.at("simulation_dir").get<std::string>();
      c.word = j.at("word").get<std::string>();
      c.out_dir = j.at("out_dir").get<std::string>();
      return c;
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("malformed run config: ") + e.what());
    }
  }
};

/// Plotting window: the base support widened by 0.5, stretched to reach past
/// the largest outlier any spike could produce.
inline Interval default_range(const Interval& support, const std::vector<double>& spikes, bool multiplicative,
                              double lambda) {
  double lo = support.lo - 0.5, hi = support.hi + 0.5;
  for (double th : spikes) {
    if (multiplicative) {
      double reach = th > 1.0 + std::sqrt(lambda) ? th + lambda * th / (th - 1.0) : th;
      hi = std::max(hi, reach + 1.0);
    } else if (th > 0.0) {
      hi = std::max(hi, th + 1.5);
    } else {
      lo = std::min(lo, th - 1.5);
    }
  }
  return {lo, hi};
}

inline Interval ensemble_support(const EnsembleSpec& s) {
  switch (s.kind) {
    case EnsembleKind::gue:
    case EnsembleKind::goe: return {-kSqrt2, kSqrt2};
    case EnsembleKind::haar: {
      auto [lo, hi] = std::minmax_element(s.base_eigenvalues.begin(), s.base_eigenvalues.end());
      return {*lo, *hi};
    }
    case EnsembleKind::wishart: return mp_support(s.lambda);
  }
  return {-kSqrt2, kSqrt2};
}

inline Interval resolved_range(const std::vector<double>& range) {
  if (range.size() != 2) throw ConfigError("range needs exactly two values lo,hi");
  if (!(range[1] > range[0])) throw ConfigError("range must satisfy lo < hi");
  return {range[0], range[1]};
}

// --- comparison ----------------------------------------------------------------

struct BinComparison {
  double left = 0.0, right = 0.0;
  double observed = 0.0, stderr_ = 0.0;
  double predicted = 0.0;              ///< N eta(bin) + eta'(bin)
  double predicted_uncorrected = 0.0;  ///< N eta(bin)
};

/// A bulk bin on its own, or a maximal run of bins where eta has no mass.
struct CompareCell {
  double left = 0.0, right = 0.0;
  double observed = 0.0;
  double stderr_bound = 0.0;  ///< sum of bin stderrs, an upper bound
  double predicted = 0.0, predicted_uncorrected = 0.0;
  bool bulk = false;
};

struct OutlierCheck {
  double location = 0.0;
  double observed = 0.0;
  double predicted = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CompareReport {
  std::vector<BinComparison> bins;
  std::vector<CompareCell> cells;
  int n = 0, trials = 0;
  double chi2_corrected = 0.0, chi2_uncorrected = 0.0;
  double chi2_bulk_corrected = 0.0, chi2_bulk_uncorrected = 0.0;
  double dof = 0.0;
  double p_corrected = 0.0, p_uncorrected = 0.0;
  std::vector<OutlierCheck> outliers;
  std::string note;
};

/// Simulated mean counts against N eta + eta'. Pearson's statistic on the
/// counts pooled over trials,
///   chi2 = sum_cells T (mean - pred)^2 / max(pred, 1/T),
/// with one degree of freedom per cell. Bins outside the bulk are pooled
/// into gap cells because finite-N edge leakage and outlier spread are not
/// resolved by the asymptotic prediction at bin scale. End bins absorb mass
/// beyond the range, as the histogram does.
inline CompareReport compare_prediction(const TypeBLaw& law, const Histogram& h, int n, int trials) {
  if (h.bins() == 0) throw ConfigError("compare: empty histogram");
  if (trials < 1) throw ConfigError("compare: trials must be positive");
  CompareReport r;
  r.n = n;
  r.trials = trials;
  const double T = trials;
  const double far = 1e300;
  std::vector<bool> bulk;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    BinComparison c;
    c.left = h.edges[b];
    c.right = h.edges[b + 1];
    Interval cell{b == 0 ? -far : c.left, b + 1 == h.bins() ? far : c.right};
    double eta = mass_in(law.law, cell);
    c.predicted_uncorrected = n * eta;
    c.predicted = n * eta + mass_in(law.correction, cell);
    c.observed = h.mean_counts[b];
    c.stderr_ = h.stderrs[b];
    r.bins.push_back(c);
    bulk.push_back(eta > 1e-12);
  }
  for (std::size_t b = 0; b < h.bins(); ++b) {
    const BinComparison& c = r.bins[b];
    if (bulk[b] || r.cells.empty() || r.cells.back().bulk) {
      r.cells.push_back({c.left, c.right, 0.0, 0.0, 0.0, 0.0, static_cast<bool>(bulk[b])});
    }
    CompareCell& cell = r.cells.back();
    cell.right = c.right;
    cell.observed += c.observed;
    cell.stderr_bound += c.stderr_;
    cell.predicted += c.predicted;
    cell.predicted_uncorrected += c.predicted_uncorrected;
  }
  for (const CompareCell& c : r.cells) {
    auto term = [&](double pred) { return T * (c.observed - pred) * (c.observed - pred) / std::max(pred, 1.0 / T); };
    double tc = term(c.predicted), tu = term(c.predicted_uncorrected);
    r.chi2_corrected += tc;
    r.chi2_uncorrected += tu;
    if (c.bulk) {
      r.chi2_bulk_corrected += tc;
      r.chi2_bulk_uncorrected += tu;
    }
  }
  r.dof = static_cast<double>(r.cells.size());
  r.p_corrected = boost::math::gamma_q(r.dof / 2.0, r.chi2_corrected / 2.0);
  r.p_uncorrected = boost::math::gamma_q(r.dof / 2.0, r.chi2_uncorrected / 2.0);
  // outliers: positive correction atoms in gap cells
  for (const Atom& a : law.correction.atoms()) {
    if (!(a.weight > 0.0)) continue;
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      const CompareCell& c = r.cells[i];
      bool first = i == 0, last = i + 1 == r.cells.size();
      if (!c.bulk && (first || a.location >= c.left) && (last || a.location < c.right)) {
        OutlierCheck o{a.location, c.observed, c.predicted, 3.0 * std::max(c.stderr_bound, 1.0 / T), false};
        o.pass = std::abs(o.observed - o.predicted) <= o.tolerance;
        r.outliers.push_back(o);
        break;
      }
    }
  }
  if (law.law.is_atomic())
    r.note = "atomic base: the prediction is ((N - nu(1))/N) mu + nu/N with no continuous bulk correction";
  return r;
}

inline Json to_json(const CompareReport& r) {
  Json bins = Json::array();
  for (const auto& c : r.bins)
    bins.push_back({{"bin_left", round9(c.left)},
                    {"bin_right", round9(c.right)},
                    {"observed", round9(c.observed)},
                    {"stderr", round9(c.stderr_)},
                    {"predicted", round9(c.predicted)},
                    {"predicted_uncorrected", round9(c.predicted_uncorrected)}});
  Json cells = Json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"left", round9(c.left)},
                     {"right", round9(c.right)},
                     {"bulk", c.bulk},
                     {"observed", round9(c.observed)},
                     {"predicted", round9(c.predicted)},
                     {"predicted_uncorrected", round9(c.predicted_uncorrected)}});
  Json outliers = Json::array();
  for (const auto& o : r.outliers)
    outliers.push_back({{"location", round9(o.location)},
                        {"observed", round9(o.observed)},
                        {"predicted", round9(o.predicted)},
                        {"tolerance", round9(o.tolerance)},
                        {"pass", o.pass}});
  Json j{{"n", r.n},
         {"trials", r.trials},
         {"bins", bins},
         {"cells", cells},
         {"chi2_corrected", round9(r.chi2_corrected)},
         {"chi2_uncorrected", round9(r.chi2_uncorrected)},
         {"chi2_bulk_corrected", round9(r.chi2_bulk_corrected)},
         {"chi2_bulk_uncorrected", round9(r.chi2_bulk_uncorrected)},
         {"dof", round9(r.dof)},
         {"p_corrected", round9(r.p_corrected)},
         {"p_uncorrected", round9(r.p_uncorrected)},
         {"corrected_not_worse", r.chi2_corrected <= r.chi2_uncorrected},
         {"outliers", outliers}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

// --- subcommands ---------------------------------------------------------------

namespace cli {

struct Prediction {
  TypeBLaw law;
  std::vector<OutlierRoot> outliers;
  Interval range{-1.0, 1.0};
};

inline Prediction predict(RunConfig& cfg) {
  SpikeSet spikes(cfg.spikes);
  if (cfg.n < static_cast<int>(spikes.count())) throw ConfigError("predict: N must be at least the number of spikes");
  if (cfg.grid_points < 16) throw ConfigError("predict: grid-points must be at least 16");
  if (cfg.points < 2) throw ConfigError("predict: points must be at least 2");
  const std::size_t gp = static_cast<std::size_t>(cfg.grid_points);
  const bool multiplicative = cfg.base == "mp";
  std::vector<OutlierRoot> outliers;
  TypeBLaw law = [&]() -> TypeBLaw {
    if (cfg.base == "semicircle" || cfg.base == "goe-semicircle") {
      TypeBLaw base = cfg.base == "semicircle" ? gue_law(gp) : goe_law(gp);
      outliers = solve_outliers_additive(base.law, spikes);
      return typeb_additive(base, spike_law(spikes), gp);
    }
    if (cfg.base == "atomic") {
      if (cfg.atoms.empty()) throw ConfigError("predict: atomic base needs --atoms");
      TypeBLaw base{Measure::uniform_atoms(cfg.atoms), SignedMeasure{}, {}};
      outliers = solve_outliers_additive(base.law, spikes);
      return typeb_additive(base, spike_law(spikes), gp);
    }
    if (multiplicative) {
      for (double th : spikes.thetas)
        if (!(th > 0.0)) throw ConfigError("predict: multiplicative spikes must be positive");
      std::vector<double> grid = mp_correction_grid(cfg.lambda, spikes);
      outliers = solve_outliers_multiplicative(cfg.lambda, spikes);
      return typeb_multiplicative(cfg.lambda, spikes, grid);
    }
    throw ConfigError("predict: unknown base '" + cfg.base + "'");
  }();
  Prediction p{std::move(law), std::move(outliers)};
  if (cfg.range.empty()) {
    Interval r = default_range(p.law.law.support(), cfg.spikes, multiplicative, cfg.lambda);
    cfg.range = {r.lo, r.hi};
  }
  p.range = resolved_range(cfg.range);
  return p;
}

inline std::string spectrum_csv(const Prediction& p, int points) {
  std::ostringstream os;
  os << "t,eta,eta_prime\n";
  for (double t : uniform_points(p.range.lo, p.range.hi, static_cast<std::size_t>(points)))
    os << format9(t) << ',' << format9(p.law.law.density(t)) << ',' << format9(p.law.correction.density_at(t)) << '\n';
  return os.str();
}

inline Json outliers_json(const std::vector<OutlierRoot>& roots) {
  Json a = Json::array();
  for (const auto& r : roots) a.push_back({{"theta", round9(r.theta)}, {"location", round9(r.location)}, {"mass", 1.0}});
  return {{"outliers", a}};
}

inline void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
}

inline std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline int run_predict(RunConfig& cfg, std::ostream& out) {
  Prediction p = predict(cfg);
  prepare_out_dir(cfg);
  write_text(path_in(cfg.out_dir, "spectrum.csv"), spectrum_csv(p, cfg.points));
  write_json(path_in(cfg.out_dir, "outliers.json"), outliers_json(p.outliers));
  write_json(path_in(cfg.out_dir, "typeb_law.json"), to_json(p.law));
  write_json(path_in(cfg.out_dir, "config.json"), cfg.to_json());
  out << "outliers:";
  if (p.outliers.empty()) out << " none";
  for (const auto& r : p.outliers) out << ' ' << format9(r.location) << " (theta " << format9(r.theta) << ')';
  out << "\ncorrection mass: " << format9(total_mass(p.law.correction)) << "\nwrote " << cfg.out_dir << '\n';
  return 0;
}

inline int run_simulate(RunConfig& cfg, std::ostream& out) {
  EnsembleSpec& s = cfg.ensemble;
  s.validate();
  if (cfg.bins < 1) throw ConfigError("simulate: bins must be positive");
  if (cfg.range.empty()) {
    bool mult = s.kind == EnsembleKind::wishart;
    Interval r = default_range(ensemble_support(s), mult ? s.sigma_spikes.thetas : s.spikes.thetas, mult, s.lambda);
    cfg.range = {r.lo, r.hi};
  }
  Interval range = resolved_range(cfg.range);
  auto spectra = sample_spectra(s);
  Histogram h = histogram_from_spectra(spectra, cfg.bins, range, s.n);
  prepare_out_dir(cfg);
  write_text(path_in(cfg.out_dir, "histogram.csv"), histogram_csv(h));
  write_json(path_in(cfg.out_dir, "ensemble.json"), to_json(s));
  write_json(path_in(cfg.out_dir, "config.json"), cfg.to_json());
  std::vector<double> top;
  for (const auto& ev : spectra) top.push_back(ev.back());
  MeanEstimate e = mean_and_stderr(top);
  out << "trials " << s.trials << ", N " << s.n << ", mean top eigenvalue " << format9(e.mean) << " +- "
      << format9(e.stderr_) << "\nwrote " << cfg.out_dir << '\n';
  return 0;
}

inline int run_compare(RunConfig& cfg, std::ostream& out) {
  if (cfg.prediction_dir.empty() || cfg.simulation_dir.empty())
    throw ConfigError("compare: --prediction and --simulation are required");
  TypeBLaw law = typeb_law_from_json(read_json(path_in(cfg.prediction_dir, "typeb_law.json")));
  RunConfig pcfg = RunConfig::from_json(read_json(path_in(cfg.prediction_dir, "config.json")));
  EnsembleSpec spec = ensemble_from_json(read_json(path_in(cfg.simulation_dir, "ensemble.json")));
  std::istringstream csv(read_text(path_in(cfg.simulation_dir, "histogram.csv")));
  Histogram h = histogram_from_csv(csv);
  Interval prange = resolved_range(pcfg.range);
  const double eps = 1e-6;
  if (h.edges.front() < prange.lo - eps || h.edges.back() > prange.hi + eps)
    throw ConfigError("compare: histogram range [" + format9(h.edges.front()) + ", " + format9(h.edges.back()) +
                      "] is not covered by the prediction range [" + format9(prange.lo) + ", " +
                      format9(prange.hi) + "]");
  cfg.range = {h.edges.front(), h.edges.back()};
  CompareReport r = compare_prediction(law, h, spec.n, spec.trials);
  prepare_out_dir(cfg);
  write_json(path_in(cfg.out_dir, "report.json"), to_json(r));
  write_json(path_in(cfg.out_dir, "config.json"), cfg.to_json());
  out << "chi2 corrected " << format9(r.chi2_corrected) << ", uncorrected " << format9(r.chi2_uncorrected)
      << " (dof " << format9(r.dof) << ")\n";
  for (const auto& o : r.outliers)
    out << "outlier " << format9(o.location) << ": observed " << format9(o.observed) << ", predicted "
        << format9(o.predicted) << (o.pass ? " PASS" : " FAIL") << '\n';
  if (!r.note.empty()) out << "note: " << r.note << '\n';
  return 0;
}

inline InfinitesimalState<double> ensemble_state(const EnsembleSpec& s, int degree) {
  switch (s.kind) {
    case EnsembleKind::gue: return measure_state(Measure::semicircle(), degree);
    case EnsembleKind::goe: return goe_state(degree);
    case EnsembleKind::haar: return measure_state(Measure::uniform_atoms(s.base_eigenvalues), degree);
    case EnsembleKind::wishart:
      if (!s.sigma_spikes.empty()) throw ConfigError("moments: wishart sigma spikes are not supported");
      return measure_state(Measure::marchenko_pastur(s.lambda), degree);
  }
  throw ConfigError("moments: unsupported ensemble");
}

inline int run_moments(RunConfig& cfg, std::ostream& out) {
  NCPolynomial word = parse_word(cfg.word);
  EnsembleSpec& s = cfg.ensemble;
  s.validate();
  if (!s.spikes.empty()) throw ConfigError("moments: write spikes into the word as multiples of e_jj");
  int degree = std::max(kDefaultMaxMomentDegree, word.max_a_degree());
  MomentComparison c = compare_moment(word, s, ensemble_state(s, degree));
  prepare_out_dir(cfg);
  Json report{{"word", cfg.word},
              {"phi", round9(c.phi)},
              {"phi_prime", round9(c.phi_prime)},
              {"predicted", round9(c.predicted)},
              {"mc_mean", round9(c.mc_mean)},
              {"mc_stderr", round9(c.mc_stderr)},
              {"mc_phi_prime", round9(c.mc_phi_prime)},
              {"mc_phi_prime_stderr", round9(c.mc_phi_prime_stderr)},
              {"tolerance", round9(c.tolerance)},
              {"pass", c.pass}};
  write_json(path_in(cfg.out_dir, "report.json"), report);
  write_json(path_in(cfg.out_dir, "config.json"), cfg.to_json());
  out << "prediction phi + phi'/N = " << format9(c.predicted) << "  (phi " << format9(c.phi) << ", phi' "
      << format9(c.phi_prime) << ")\n"
      << "monte carlo " << format9(c.mc_mean) << " +- " << format9(c.mc_stderr) << ", phi' estimate "
      << format9(c.mc_phi_prime) << " +- " << format9(c.mc_phi_prime_stderr) << '\n'
      << (c.pass ? "PASS" : "FAIL") << '\n';
  return 0;
}

inline std::string default_out_dir() {
  const char* env = std::getenv("TYPEB_OUT_DIR");
  return env && *env ? env : "typeb_out";
}

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  std::string ensemble = "gue";
  std::vector<double> sigma_spikes;
  CLI::App app{"Type B free convolution: spiked random matrix spectra and their 1/N corrections"};
  app.require_subcommand(1);

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_dir, "Output directory (default $TYPEB_OUT_DIR or ./typeb_out)");
  };
  auto add_ensemble = [&](CLI::App* sub) {
    sub->add_option("--ensemble", ensemble, "gue | goe | haar | wishart")->capture_default_str();
    sub->add_option("--n", cfg.ensemble.n, "Matrix size")->capture_default_str();
    sub->add_option("--trials", cfg.ensemble.trials, "Number of sampled matrices")->capture_default_str();
    sub->add_option("--seed", cfg.ensemble.seed, "RNG seed")->capture_default_str();
    sub->add_option("--lambda", cfg.ensemble.lambda, "Wishart ratio p/N")->capture_default_str();
    sub->add_option("--base-eigenvalues", cfg.ensemble.base_eigenvalues, "Haar: eigenvalue pattern, tiled")
        ->delimiter(',');
  };

  CLI::App* pred = app.add_subcommand("predict", "Bulk law, 1/N correction and outliers");
  pred->add_option("--base", cfg.base, "semicircle | goe-semicircle | atomic | mp")->capture_default_str();
  pred->add_option("--spikes", cfg.spikes, "Spike eigenvalues theta_j")->delimiter(',');
  pred->add_option("--atoms", cfg.atoms, "Atomic base: equally weighted locations")->delimiter(',');
  pred->add_option("--lambda", cfg.lambda, "Free Poisson rate")->capture_default_str();
  pred->add_option("--n", cfg.n, "Matrix size N")->capture_default_str();
  pred->add_option("--grid-points", cfg.grid_points, "Quadrature grid size")->capture_default_str();
  pred->add_option("--points", cfg.points, "Rows of spectrum.csv")->capture_default_str();
  pred->add_option("--range", cfg.range, "Spectrum window lo,hi")->delimiter(',')->expected(2);
  add_out(pred);

  CLI::App* sim = app.add_subcommand("simulate", "Averaged eigenvalue histogram of a random-matrix ensemble");
  add_ensemble(sim);
  sim->add_option("--spikes", cfg.spikes, "Additive spikes theta_j E_jj")->delimiter(',');
  sim->add_option("--sigma-spikes", sigma_spikes, "Wishart: leading eigenvalues of Sigma")->delimiter(',');
  sim->add_option("--bins", cfg.bins, "Histogram bins")->capture_default_str();
  sim->add_option("--range", cfg.range, "Histogram window lo,hi")->delimiter(',')->expected(2);
  add_out(sim);

  CLI::App* cmp = app.add_subcommand("compare", "Prediction against simulation, per bin and chi-square");
  cmp->add_option("--prediction", cfg.prediction_dir, "Output directory of predict")->required();
  cmp->add_option("--simulation", cfg.simulation_dir, "Output directory of simulate")->required();
  add_out(cmp);

  CLI::App* mom = app.add_subcommand("moments", "Monte Carlo check of phi + phi'/N for a word");
  mom->add_option("--word", cfg.word, "Word, e.g. \"(a+4 e11)^2\"")->required();
  add_ensemble(mom);
  add_out(mom);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir();

  try {
    if (sim->parsed() || mom->parsed()) {
      cfg.ensemble.kind = parse_ensemble(ensemble);
      cfg.ensemble.spikes = SpikeSet(cfg.spikes);
      cfg.ensemble.sigma_spikes = SpikeSet(sigma_spikes);
      cfg.n = cfg.ensemble.n;
    }
    if (pred->parsed()) {
      cfg.subcommand = "predict";
      return run_predict(cfg, out);
    }
    if (sim->parsed()) {
      cfg.subcommand = "simulate";
      return run_simulate(cfg, out);
    }
    if (cmp->parsed()) {
      cfg.subcommand = "compare";
      return run_compare(cfg, out);
    }
    cfg.subcommand = "moments";
    return run_moments(cfg, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace cli
}  // namespace typeb
