// ptflow command-line front-end: declarative experiment configs in,
// CSV/JSON data and SVG plots out.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 numeric failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptflow/criticality.hpp"
#include "ptflow/csv.hpp"
#include "ptflow/dynamics.hpp"
#include "ptflow/embedding.hpp"
#include "ptflow/metric.hpp"
#include "ptflow/optics.hpp"
#include "ptflow/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

/// Anything wrong with the config or the command line (exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_verbose = false;

void vlog(const std::string& msg) {
  if (g_verbose) std::fprintf(stderr, "[ptflow] %s\n", msg.c_str());
}

// ---------------------------------------------------------------------------
// Checksums and the run manifest.

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// All artifact writes funnel through here so the manifest checksums always
/// match the emitted files.
class Emitter {
 public:
  explicit Emitter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec && !fs::is_directory(dir_))
      throw ConfigError("cannot create output directory " + dir_.string());
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns) {
    ptflow::write_csv(path(name).string(), header, columns);
    record(name);
  }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary);
    out << content;
    if (!out) throw ptflow::Error("cannot write " + path(name).string());
    out.close();
    record(name);
  }

  void svg(const std::string& name, const ptflow::SvgPlot& plot) {
    plot.write(path(name).string());
    record(name);
  }

  /// Little-endian 64-bit float pairs (re, im), one row per grid point.
  void field(const std::string& name, const ptflow::BeamState& b) {
    std::ofstream out(path(name), std::ios::binary);
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double re = b.field(j).real(), im = b.field(j).imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(re));
      out.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
    if (!out) throw ptflow::Error("cannot write " + path(name).string());
    out.close();
    record(name);

    json side;
    side["format"] = "little-endian float64 (re, im) pairs, one per grid point";
    side["n"] = b.size();
    side["length"] = b.length;
    side["dx"] = b.dx();
    side["x0"] = b.x(0);
    side["z"] = b.z;
    text(name + ".json", side.dump(2) + "\n");
  }

  void manifest(const std::string& config_hash, double wall_seconds) {
    json m;
    m["schema_version"] = 1;
    m["tool_version"] = kToolVersion;
    m["config_hash"] = config_hash;
    m["wall_clock_seconds"] = wall_seconds;
    json outs = json::object();
    for (const auto& [name, sum] : outputs_) outs[name] = sum;
    m["outputs"] = outs;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << m.dump(2) << "\n";
    if (!out) throw ptflow::Error("cannot write manifest.json");
  }

 private:
  void record(const std::string& name) {
    outputs_.emplace_back(name, checksum_hex(slurp(path(name))));
    vlog("wrote " + name);
  }

  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

// ---------------------------------------------------------------------------
// Config access helpers (all failures are ConfigError, exit 1).

const json& need(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config: missing key '" + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& key) {
  const json& v = need(j, key);
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& key, double def) {
  return j.contains(key) ? num(j, key) : def;
}

int int_or(const json& j, const std::string& key, int def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw ConfigError("config: '" + key + "' must be an integer");
  return v.get<int>();
}

std::string str(const json& j, const std::string& key) {
  const json& v = need(j, key);
  if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

json parse_config(const fs::path& path) {
  const std::string raw = slurp(path);
  try {
    return json::parse(raw);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; convert it to line:column so the
    // diagnostic is anchored in the file.
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < raw.size(); ++k) {
      if (raw[k] == '\n') { ++line; col = 1; } else { ++col; }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared fit logic (the `fit` subcommand and the `fit` experiment kind).

json fit_csv(const fs::path& csv_path, const std::string& kind,
             std::optional<double> lo, std::optional<double> hi,
             Emitter* emit) {
  if (kind != "power" && kind != "exp")
    throw ConfigError("fit: kind must be 'power' or 'exp'");
  ptflow::CsvTable t;
  try {
    t = ptflow::read_csv(csv_path.string());
  } catch (const ptflow::Error& e) {
    throw ConfigError(e.what());  // unreadable input is a usage error
  }
  if (t.columns.size() < 2)
    throw ConfigError("fit: CSV must have at least two columns (x, y)");

  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.columns[0].size(); ++k) {
    const double xv = t.columns[0][k], yv = t.columns[1][k];
    if (lo && xv < *lo) continue;
    if (hi && xv > *hi) continue;
    if (!(yv > 0) || (kind == "power" && !(xv > 0))) continue;
    x.push_back(kind == "power" ? std::log(xv) : xv);
    y.push_back(std::log(yv));
  }
  if (x.size() < 5) throw ptflow::FitUnstable("fit: fewer than 5 usable points");

  double mean = 0.0, var = 0.0;
  for (double v : y) mean += v;
  mean /= double(y.size());
  for (double v : y) var += (v - mean) * (v - mean);
  if (var / double(y.size()) < 1e-20)
    throw ptflow::FitUnstable("fit: y column is constant");

  const ptflow::LinearFit f = ptflow::linear_fit(x, y);
  if (f.slope_stderr > 0.1)
    throw ptflow::FitUnstable("fit: slope stderr = " +
                              std::to_string(f.slope_stderr));

  json out;
  out["kind"] = kind;
  out["input"] = csv_path.string();
  out["n_points"] = x.size();
  out["stderr"] = f.slope_stderr;
  out["r_squared"] = f.r_squared;
  out["window"] = {lo ? *lo : t.columns[0].front(),
                   hi ? *hi : t.columns[0].back()};
  if (kind == "power") {
    out["exponent"] = f.slope;
    out["amplitude"] = std::exp(f.intercept);
  } else {
    out["rate"] = -f.slope;
    out["tau"] = -1.0 / f.slope;
    out["amplitude"] = std::exp(f.intercept);
  }
  if (emit) emit->text("fit.json", out.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Experiments.

double default_horizon(double a) {
  if (a < 1.0) return 3.0 * M_PI / std::sqrt(1.0 - a * a);       // 3 periods
  if (a > 1.0) return 10.0 * 0.5 / std::sqrt(a * a - 1.0);       // 10 tau
  return 100.0;                                                   // EP tail
}

void run_twolevel_series(const json& cfg, Emitter& emit, unsigned threads) {
  const double s = num_or(cfg, "s", 1.0);
  const int steps = int_or(cfg, "steps", 2000);
  if (steps < 2) throw ConfigError("config: 'steps' must be >= 2");
  const json& av = need(cfg, "a_values");
  if (!av.is_array() || av.empty())
    throw ConfigError("config: 'a_values' must be a non-empty array");

  const auto r1 = ptflow::DensityMatrix::pure(ptflow::CVec{{1.0, 0.0}});
  const auto r2 = ptflow::DensityMatrix::pure(ptflow::CVec{{0.0, 1.0}});

  ptflow::SvgPlot plot("Distinguishability of a two-level PT pair", "t",
                       "D(t)");
  for (const json& ja : av) {
    if (!ja.is_number())
      throw ConfigError("config: 'a_values' entries must be numbers");
    const double a = ja.get<double>();
    const double t_max =
        cfg.contains("t_max") ? num(cfg, "t_max") : default_horizon(a) / s;
    vlog("two-level series a = " + fmt_double(a));
    const auto series = ptflow::distinguishability_series(
        ptflow::two_level(s, a), r1, r2, t_max, steps, threads);
    emit.csv("twolevel_a" + fmt_double(a) + ".csv", {"t", "D"},
             {series.times, series.values});
    plot.add_line(series.times, series.values, "a = " + fmt_double(a));
  }
  emit.svg("distinguishability.svg", plot);
}

void run_scan(const json& cfg, Emitter& emit, unsigned threads) {
  const std::string obs_name = str(cfg, "observable");
  ptflow::Observable obs;
  if (obs_name == "recurrence_T") obs = ptflow::Observable::RecurrenceT;
  else if (obs_name == "relaxation_tau") obs = ptflow::Observable::RelaxationTau;
  else if (obs_name == "gap_delta_omega") obs = ptflow::Observable::GapDeltaOmega;
  else if (obs_name == "gamma_gap_delta_gamma")
    obs = ptflow::Observable::GammaGapDeltaGamma;
  else
    throw ConfigError(
        "config: 'observable' must be one of recurrence_T, relaxation_tau, "
        "gap_delta_omega, gamma_gap_delta_gamma");

  const json& jg = need(cfg, "grid");
  const double lo = num(jg, "lo"), hi = num(jg, "hi");
  const int n = int_or(jg, "points", 12);
  if (!(hi > lo) || n < 2)
    throw ConfigError("config: grid needs lo < hi and points >= 2");
  const std::string scale =
      jg.contains("scale") ? str(jg, "scale") : std::string("log");
  const double lambda_ep = num_or(cfg, "lambda_ep", 1.0);

  std::vector<double> grid;
  for (int k = 0; k < n; ++k) {
    const double f = double(k) / (n - 1);
    if (scale == "linear") {
      grid.push_back(lo + f * (hi - lo));
    } else if (scale == "log") {
      // log-spaced in distance from the EP
      const double dlo = std::abs(lo - lambda_ep), dhi = std::abs(hi - lambda_ep);
      if (!(dlo > 0) || !(dhi > 0))
        throw ConfigError("config: log grid endpoints must avoid lambda_ep");
      const double side = (lo >= lambda_ep) ? 1.0 : -1.0;
      grid.push_back(lambda_ep +
                     side * dlo * std::pow(dhi / dlo, f));
    } else {
      throw ConfigError("config: grid 'scale' must be 'log' or 'linear'");
    }
  }
  std::sort(grid.begin(), grid.end());

  const double s = num_or(cfg, "s", 1.0);
  const ptflow::Family family = [s](double a) { return ptflow::two_level(s, a); };
  ptflow::ScanOptions opt;
  opt.steps = int_or(cfg, "steps", 2000);
  opt.threads = threads;
  vlog("scanning " + obs_name + " over " + std::to_string(grid.size()) +
       " points");
  const ptflow::ScanResult sr = ptflow::scan(family, grid, obs, opt);

  std::vector<double> cl, cv, cs, cok;
  for (const auto& pt : sr.points) {
    cl.push_back(pt.lambda);
    cv.push_back(pt.value);
    cs.push_back(pt.stderr_);
    cok.push_back(pt.ok ? 1.0 : 0.0);
  }
  emit.csv("scan.csv", {"lambda", "value", "stderr", "ok"}, {cl, cv, cs, cok});

  std::vector<double> lx, ly;
  for (const auto& pt : sr.points)
    if (pt.ok && pt.value > 0 && std::abs(pt.lambda - lambda_ep) > 0) {
      lx.push_back(std::log10(std::abs(pt.lambda - lambda_ep)));
      ly.push_back(std::log10(pt.value));
    }
  ptflow::SvgPlot plot(std::string("Scan of ") + obs_name,
                       "log10 |lambda - lambda_EP|", "log10 value");
  plot.add_line(lx, ly, obs_name);
  emit.svg("scan.svg", plot);

  if (cfg.value("fit", true)) {
    const ptflow::ExponentFit f = ptflow::fit_exponent(sr, lambda_ep);
    json jf;
    jf["observable"] = obs_name;
    jf["lambda_ep"] = lambda_ep;
    jf["exponent"] = f.exponent;
    jf["amplitude"] = f.amplitude;
    jf["stderr"] = f.stderr_;
    jf["r_squared"] = f.r_squared;
    jf["window"] = {f.window_lo, f.window_hi};
    emit.text("scan_fit.json", jf.dump(2) + "\n");
  }
}

void run_embed(const json& cfg, Emitter& emit, unsigned threads) {
  const double s = num_or(cfg, "s", 1.0);
  const double a = num(cfg, "a");
  if (!(a > 0.0 && a < 1.0))
    throw ConfigError("config: 'a' must lie in (0, 1) for the embedding");
  const int steps = int_or(cfg, "steps", 2000);
  if (steps < 2) throw ConfigError("config: 'steps' must be >= 2");
  const double t_max =
      cfg.contains("t_max") ? num(cfg, "t_max") : default_horizon(a) / s;

  const ptflow::CMat h = ptflow::two_level(s, a);
  const ptflow::MetricPair mp = ptflow::build_metric_pair(h);
  const ptflow::ExtendedHamiltonian eh = ptflow::extended_hamiltonian(h, mp);
  const ptflow::ExtendedState x0 =
      ptflow::extend_state(ptflow::CVec{{1.0, 0.0}}, mp);

  vlog("embedding a = " + fmt_double(a));
  const auto series = ptflow::distinguishability_series(
      h, ptflow::DensityMatrix::pure(ptflow::CVec{{1.0, 0.0}}),
      ptflow::DensityMatrix::pure(ptflow::CVec{{0.0, 1.0}}), t_max, steps,
      threads);

  std::vector<double> entropy(series.times.size());
  ptflow::parallel_for(series.times.size(), threads, [&](std::size_t k) {
    entropy[k] = ptflow::entanglement_entropy(
        ptflow::evolve_extended(eh, x0, series.times[k]));
  });

  emit.csv("embed.csv", {"t", "D", "S"},
           {series.times, series.values, entropy});
  ptflow::SvgPlot plot("Distinguishability and ancilla entanglement, a = " +
                           fmt_double(a),
                       "t", "D(t), S(t)");
  plot.add_line(series.times, series.values, "D(t)");
  plot.add_line(series.times, entropy, "S(t)");
  emit.svg("embed.svg", plot);
}

void run_optics(const json& cfg, Emitter& emit) {
  ptflow::OpticsConfig oc;
  oc.v0 = num_or(cfg, "v0", oc.v0);
  oc.lam = num_or(cfg, "lam", oc.lam);
  oc.period = num_or(cfg, "period", oc.period);
  oc.length = num_or(cfg, "length", oc.length);
  oc.n = int_or(cfg, "n", oc.n);
  oc.dz = num_or(cfg, "dz", oc.dz);
  oc.z_max = num_or(cfg, "z_max", oc.z_max);
  try {
    oc.validate();
  } catch (const ptflow::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const int samples = int_or(cfg, "samples", 2000);

  const std::string variant_name = str(cfg, "variant");
  ptflow::EpDecayVariant variant;
  if (variant_name == "centers")
    variant = ptflow::EpDecayVariant::DifferentCenters;
  else if (variant_name == "widths")
    variant = ptflow::EpDecayVariant::DifferentWidths;
  else
    throw ConfigError("config: 'variant' must be 'centers' or 'widths'");

  // Input field snapshots (the decay run itself reports only D(z)).
  const ptflow::GaussianSpec g1 =
      (variant == ptflow::EpDecayVariant::DifferentCenters)
          ? ptflow::GaussianSpec{6.0 * M_PI, 10.0, -1.0}
          : ptflow::GaussianSpec{6.0 * M_PI, 0.0, -1.0};
  const ptflow::GaussianSpec g2 =
      (variant == ptflow::EpDecayVariant::DifferentCenters)
          ? ptflow::GaussianSpec{6.0 * M_PI, -10.0, -1.0}
          : ptflow::GaussianSpec{3.0 * M_PI, 0.0, -1.0};
  emit.field("field_1.bin", ptflow::make_gaussian(oc, g1));
  emit.field("field_2.bin", ptflow::make_gaussian(oc, g2));

  vlog("optics decay experiment, variant = " + variant_name);
  const ptflow::EpDecayResult res =
      ptflow::ep_decay_experiment(oc, variant, samples);

  emit.csv("optics.csv", {"z", "D"}, {res.zs, res.d});

  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < res.zs.size(); ++k) {
    const double v = (variant == ptflow::EpDecayVariant::DifferentCenters)
                         ? std::abs(res.d[k] - res.d_inf)
                         : res.d[k];
    if (res.zs[k] > 0 && v > 0) {
      lx.push_back(std::log10(res.zs[k]));
      ly.push_back(std::log10(v));
    }
  }
  ptflow::SvgPlot plot("EP decay, " + variant_name, "log10 z",
                       variant == ptflow::EpDecayVariant::DifferentCenters
                           ? "log10 |D - D_inf|"
                           : "log10 D");
  plot.add_line(lx, ly, variant_name);
  emit.svg("optics.svg", plot);

  json jf;
  jf["variant"] = variant_name;
  jf["exponent"] = res.exponent;
  jf["stderr"] = res.exponent_stderr;
  jf["d_inf"] = res.d_inf;
  jf["window"] = {res.fit_lo, res.fit_hi};
  emit.text("optics_fit.json", jf.dump(2) + "\n");
}

int run_config(const fs::path& config_path, const fs::path& out_dir,
               unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string raw = slurp(config_path);
  const json cfg = parse_config(config_path);
  if (!cfg.is_object()) throw ConfigError("config: top level must be an object");
  if (!cfg.contains("schema_version") ||
      !cfg.at("schema_version").is_number_integer() ||
      cfg.at("schema_version").get<int>() != 1)
    throw ConfigError("config: 'schema_version' must be the integer 1");
  const std::string kind = str(cfg, "experiment");

  Emitter emit(out_dir);
  if (kind == "twolevel-series") run_twolevel_series(cfg, emit, threads);
  else if (kind == "scan") run_scan(cfg, emit, threads);
  else if (kind == "embed") run_embed(cfg, emit, threads);
  else if (kind == "optics") run_optics(cfg, emit);
  else if (kind == "fit")
    fit_csv(str(cfg, "input"), str(cfg, "kind"),
            cfg.contains("window_lo") ? std::optional<double>(num(cfg, "window_lo"))
                                      : std::nullopt,
            cfg.contains("window_hi") ? std::optional<double>(num(cfg, "window_hi"))
                                      : std::nullopt,
            &emit);
  else
    throw ConfigError(
        "config: 'experiment' must be one of twolevel-series, scan, embed, "
        "optics, fit");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit.manifest(checksum_hex(raw), wall);
  vlog("done in " + fmt_double(wall) + " s");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ptflow: PT-symmetric dynamics experiments"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  int threads = 1;
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for independent points")
      ->capture_default_str();
  app.add_flag("--verbose", g_verbose, "Progress logging on stderr");

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment config file (JSON)")
      ->required();

  std::string csv_path, fit_kind;
  double win_lo = 0.0, win_hi = 0.0;
  CLI::App* fit = app.add_subcommand("fit", "Fit a power/exponential law to a CSV");
  fit->add_option("csv", csv_path, "Input CSV with x,y columns")->required();
  fit->add_option("--kind", fit_kind, "power | exp")->required();
  CLI::Option* olo = fit->add_option("--window-lo", win_lo, "Fit window lower x");
  CLI::Option* ohi = fit->add_option("--window-hi", win_hi, "Fit window upper x");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are configuration errors
  }

  // The environment variable takes precedence over the flag.
  if (const char* env = std::getenv("PTFLOW_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: PTFLOW_THREADS is not an integer\n");
      return 1;
    }
  }
  if (threads < 1) {
    std::fprintf(stderr, "error: thread count must be >= 1\n");
    return 1;
  }

  try {
    if (app.got_subcommand(run))
      return run_config(config_path, out_dir, unsigned(threads));
    Emitter emit{fs::path(out_dir)};
    const json f = fit_csv(csv_path, fit_kind,
                           olo->count() ? std::optional<double>(win_lo)
                                        : std::nullopt,
                           ohi->count() ? std::optional<double>(win_hi)
                                        : std::nullopt,
                           &emit);
    std::printf("%s\n", f.dump(2).c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ptflow::Error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
