#include "translaw/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "translaw/complexity.hpp"
#include "translaw/config.hpp"
#include "translaw/csv.hpp"
#include "translaw/fit.hpp"
#include "translaw/kernels.hpp"
#include "translaw/law.hpp"
#include "translaw/network.hpp"
#include "translaw/rates.hpp"
#include "translaw/spectrum.hpp"
#include "translaw/transfer.hpp"

namespace translaw::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One-line failure with a stable machine-readable class.
struct CliError {
  std::string cls;
  std::string what;
};

[[noreturn]] void die(const std::string& cls, const std::string& what) {
  throw CliError{cls, what};
}

// JSON has no infinities; report them as strings rather than nulls.
json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

bool parse_double_str(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE && !std::isnan(out);
}

bool parse_i64_str(const std::string& s, long long& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

bool parse_u64_str(const std::string& s, unsigned long long& out) {
  if (s.empty() || s[0] == '-') return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtoull(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

bool parse_bool_str(std::string s, bool& out) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return out = true, true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return out = false, true;
  return false;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    out.push_back(s.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Resolves one command's settings with precedence flag > config > default
// and echoes every resolved value for the manifest.
struct Scope {
  const ConfigFile& cfg;
  std::string section;
  json resolved = json::object();

  const ConfigEntry* entry(const std::string& key) const {
    const auto* sec = cfg.section(section);
    if (!sec) return nullptr;
    const auto it = sec->find(key);
    return it == sec->end() ? nullptr : &it->second;
  }

  [[noreturn]] void bad(const std::string& key, const ConfigEntry& e,
                        const std::string& what) const {
    die("config", cfg.path + ":" + std::to_string(e.line) + ": key '" + key + "': " + what +
                      ": '" + e.value + "'");
  }

  static bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

  double num(const CLI::Option* o, double flagv, const std::string& key, double def) {
    double v = def;
    if (const auto* e = entry(key); e && !given(o)) {
      if (!parse_double_str(e->value, v)) bad(key, *e, "not a number");
    } else if (given(o)) {
      v = flagv;
    }
    resolved[key] = jnum(v);
    return v;
  }

  std::optional<double> opt_num(const CLI::Option* o, double flagv, const std::string& key) {
    std::optional<double> v;
    if (given(o)) {
      v = flagv;
    } else if (const auto* e = entry(key)) {
      double parsed;
      if (!parse_double_str(e->value, parsed)) bad(key, *e, "not a number");
      v = parsed;
    }
    resolved[key] = v ? jnum(*v) : json(nullptr);
    return v;
  }

  int integer(const CLI::Option* o, int flagv, const std::string& key, int def) {
    long long v = def;
    if (const auto* e = entry(key); e && !given(o)) {
      if (!parse_i64_str(e->value, v)) bad(key, *e, "not an integer");
    } else if (given(o)) {
      v = flagv;
    }
    if (v < INT_MIN || v > INT_MAX) die("invalid", "key '" + key + "': out of range");
    resolved[key] = v;
    return static_cast<int>(v);
  }

  std::uint64_t seed_val(const CLI::Option* o, std::uint64_t flagv, const std::string& key,
                         std::uint64_t def) {
    unsigned long long v = def;
    if (const auto* e = entry(key); e && !given(o)) {
      if (!parse_u64_str(e->value, v)) bad(key, *e, "not a nonnegative integer");
    } else if (given(o)) {
      v = flagv;
    }
    resolved[key] = v;
    return v;
  }

  bool boolean(const CLI::Option* o, bool flagv, const std::string& key, bool def) {
    bool v = def;
    if (const auto* e = entry(key); e && !given(o)) {
      if (!parse_bool_str(e->value, v)) bad(key, *e, "not a boolean");
    } else if (given(o)) {
      v = flagv;
    }
    resolved[key] = v;
    return v;
  }

  std::string str(const CLI::Option* o, const std::string& flagv, const std::string& key,
                  const std::string& def) {
    std::string v = def;
    if (const auto* e = entry(key); e && !given(o)) v = e->value;
    else if (given(o)) v = flagv;
    resolved[key] = v;
    return v;
  }

  std::string str_required(const CLI::Option* o, const std::string& flagv,
                           const std::string& key) {
    if (!given(o) && entry(key) == nullptr)
      die("usage", "missing required setting '" + key + "' (flag --" + key +
                       " or config [" + section + "] " + key + ")");
    return str(o, flagv, key, "");
  }

  std::string choice(const CLI::Option* o, const std::string& flagv, const std::string& key,
                     const std::string& def, const std::set<std::string>& allowed) {
    const std::string v = str(o, flagv, key, def);
    if (!allowed.count(v)) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      die("invalid", "key '" + key + "': '" + v + "' is not one of " + opts);
    }
    return v;
  }

  std::vector<int> int_list(const CLI::Option* o, const std::string& flagv,
                            const std::string& key, const std::string& def, int lo) {
    const std::string raw = str(o, flagv, key, def);
    std::vector<int> out;
    for (const auto& item : split_list(raw)) {
      long long v;
      if (!parse_i64_str(item, v) || v < lo || v > INT_MAX)
        die("invalid", "key '" + key + "': bad list item '" + item + "'");
      out.push_back(static_cast<int>(v));
    }
    resolved[key] = out;
    return out;
  }

  std::vector<std::uint64_t> u64_list(const CLI::Option* o, const std::string& flagv,
                                      const std::string& key, const std::string& def) {
    const std::string raw = str(o, flagv, key, def);
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(raw)) {
      unsigned long long v;
      if (!parse_u64_str(item, v)) die("invalid", "key '" + key + "': bad list item '" + item + "'");
      out.push_back(v);
    }
    resolved[key] = out;
    return out;
  }
};

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"global", {"outdir", "compact"}},
      {"fit",
       {"input", "fixed-d", "free-d", "fixed-alpha", "multistart", "max-iter", "tol", "step-tol",
        "seed"}},
      {"fit-full", {"input", "free-eps", "multistart", "max-iter", "tol", "step-tol", "seed"}},
      {"stabilize-d",
       {"input", "max-rounds", "round-tol", "init-alpha", "init-d", "multistart", "max-iter",
        "tol", "step-tol", "seed"}},
      {"landscape",
       {"input", "alpha-min", "alpha-max", "alpha-steps", "d-min", "d-max", "d-steps"}},
      {"linearize", {"input", "alpha", "d", "c"}},
      {"simulate",
       {"mode", "t0-grid", "t1-grid", "eta0", "eta1-base", "zeta", "lambda0", "lambda1", "xi",
        "modes", "scale", "r0", "r1", "phi1-scale", "profile", "seeds", "eval-q", "width"}},
      {"spectrum", {"kernel", "xi", "modes", "scale", "q", "width", "seed", "mc-samples"}},
      {"rates", {"r0", "r1", "xi", "zeta", "t0", "t1", "eta1", "lambda1", "r0-error"}},
      {"complexity", {"input", "epsilon"}},
  };
  return table;
}

void validate_config(const ConfigFile& cfg) {
  const auto& table = allowed_keys();
  for (const auto& [name, keys] : cfg.sections) {
    const auto it = table.find(name);
    if (it == table.end())
      die("config", cfg.path + ": unknown section '" + name + "'");
    for (const auto& [key, e] : keys)
      if (!it->second.count(key))
        die("config", cfg.path + ":" + std::to_string(e.line) + ": unknown key '" + key +
                          "' in section [" + name + "]");
  }
}

std::vector<Observation> ingest(const std::string& path) {
  try {
    return read_observations(path);
  } catch (const std::exception& e) {
    die("data", e.what());
  }
}

void write_json_file(const fs::path& file, const json& j, bool compact) {
  write_text_atomic(file.string(), (compact ? j.dump() : j.dump(2)) + "\n");
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json report_params(const FitReport& rep) {
  json out = json::array();
  for (std::size_t i = 0; i < rep.names.size(); ++i)
    out.push_back({{"name", rep.names[i]},
                   {"value", jnum(rep.values[i])},
                   {"held", static_cast<bool>(rep.held[i])},
                   {"std_error", jnum(rep.stderrs[i])}});
  return out;
}

json fit_report_json(const FitReport& rep, std::size_t n_obs, const std::string& law) {
  json residuals = json::array();
  for (double r : rep.residuals) residuals.push_back(jnum(r));
  return json{{"law", law},
              {"parameters", report_params(rep)},
              {"objective", jnum(rep.objective)},
              {"converged", rep.converged},
              {"iterations", rep.iterations},
              {"observations", n_obs},
              {"residuals", residuals},
              {"warnings", rep.warnings}};
}

// Dense log-spaced curve plus the measured points, sorted by x.
PlotSeries curve_series(const std::string& x_name, const std::vector<double>& data_x,
                        const std::vector<double>& data_y,
                        const std::function<double(double)>& pred, int grid_points) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double lo = data_x[0], hi = data_x[0];
  for (double x : data_x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<std::pair<double, double>> rows;  // (x, observed-or-NaN)
  for (std::size_t i = 0; i < data_x.size(); ++i) rows.emplace_back(data_x[i], data_y[i]);
  if (hi > lo)
    for (int j = 0; j < grid_points; ++j) {
      // Ends snap to the data bounds: exp(log x) need not round-trip.
      const double x =
          j == 0               ? lo
          : j == grid_points - 1
              ? hi
              : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * j / (grid_points - 1));
      rows.emplace_back(x, nan);
    }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  PlotSeries s;
  s.x_name = x_name;
  for (const auto& [x, obs] : rows) {
    s.x.push_back(x);
    s.observed.push_back(obs);
    s.predicted.push_back(pred(x));
  }
  return s;
}

struct Ctx {
  const ConfigFile& cfg;
  fs::path outdir;
  bool compact = false;
  std::ostream& out;
  std::vector<std::string> outputs;  // file names written, for the manifest

  void emit_json(const std::string& name, const json& j) {
    write_json_file(outdir / name, j, compact);
    outputs.push_back(name);
    out << "wrote " << (outdir / name).string() << "\n";
  }
  void emit_plot(const std::string& name, const PlotSeries& s) {
    write_plot((outdir / name).string(), s);
    outputs.push_back(name);
    out << "wrote " << (outdir / name).string() << "\n";
  }
  void emit_text(const std::string& name, const std::string& text) {
    write_text_atomic((outdir / name).string(), text);
    outputs.push_back(name);
    out << "wrote " << (outdir / name).string() << "\n";
  }
};

FitOptions shared_fit_options(Scope& sc, const CLI::Option* o_multistart, int f_multistart,
                              const CLI::Option* o_max_iter, int f_max_iter,
                              const CLI::Option* o_tol, double f_tol,
                              const CLI::Option* o_step_tol, double f_step_tol,
                              const CLI::Option* o_seed, std::uint64_t f_seed) {
  FitOptions fo;
  fo.multistart = sc.integer(o_multistart, f_multistart, "multistart", fo.multistart);
  fo.max_iter = sc.integer(o_max_iter, f_max_iter, "max-iter", fo.max_iter);
  fo.tol = sc.num(o_tol, f_tol, "tol", fo.tol);
  fo.step_tol = sc.num(o_step_tol, f_step_tol, "step-tol", fo.step_tol);
  fo.seed = sc.seed_val(o_seed, f_seed, "seed", fo.seed);
  return fo;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{
      "Learning-curve scaling laws: log-space law fitting and averaged-SGD transfer "
      "simulations.\nPrecedence: flags override config-file values, which override built-in "
      "defaults. The\nTRANSLAW_OUTDIR environment variable sets the default output directory."};
  app.name("translaw");
  app.require_subcommand(1);

  std::string f_config, f_outdir;
  bool f_compact = false;
  auto* o_config = app.add_option("--config", f_config, "INI config file, one section per command");
  auto* o_outdir = app.add_option("--outdir", f_outdir, "directory the artifacts are written to");
  auto* o_compact = app.add_flag("--compact", f_compact, "single-line JSON reports");

  // fit
  auto* c_fit = app.add_subcommand("fit", "fit the simple law D*n^-alpha + C to one curve");
  std::string fit_input;
  double fit_fixed_d = 0.48, fit_fixed_alpha = 0.0;
  bool fit_free_d = false;
  int fit_multistart = 8, fit_max_iter = 500;
  double fit_tol = 1e-10, fit_step_tol = 1e-12;
  std::uint64_t fit_seed = 1;
  auto* o_fit_input = c_fit->add_option("--input", fit_input, "observations CSV (n,s,error[,group])");
  auto* o_fit_fixed_d = c_fit->add_option("--fixed-d", fit_fixed_d, "hold D at this value [0.48]");
  auto* o_fit_free_d = c_fit->add_flag("--free-d", fit_free_d, "estimate D instead of holding it");
  auto* o_fit_fixed_alpha =
      c_fit->add_option("--fixed-alpha", fit_fixed_alpha, "hold alpha at this value");
  auto* o_fit_multistart = c_fit->add_option("--multistart", fit_multistart, "restarts [8]");
  auto* o_fit_max_iter = c_fit->add_option("--max-iter", fit_max_iter, "iteration cap [500]");
  auto* o_fit_tol = c_fit->add_option("--tol", fit_tol, "relative objective tolerance [1e-10]");
  auto* o_fit_step_tol = c_fit->add_option("--step-tol", fit_step_tol, "step tolerance [1e-12]");
  auto* o_fit_seed = c_fit->add_option("--seed", fit_seed, "multistart seed [1]");

  // fit-full
  auto* c_full = app.add_subcommand("fit-full", "fit the full law delta*(n^-alpha+gamma)*s^-beta + eps");
  std::string full_input;
  bool full_free_eps = false;
  int full_multistart = 8, full_max_iter = 500;
  double full_tol = 1e-10, full_step_tol = 1e-12;
  std::uint64_t full_seed = 1;
  auto* o_full_input = c_full->add_option("--input", full_input, "observations CSV over an (n,s) grid");
  auto* o_full_free_eps =
      c_full->add_flag("--free-eps", full_free_eps, "estimate the irreducible floor (default: pinned at 0)");
  auto* o_full_multistart = c_full->add_option("--multistart", full_multistart, "restarts [8]");
  auto* o_full_max_iter = c_full->add_option("--max-iter", full_max_iter, "iteration cap [500]");
  auto* o_full_tol = c_full->add_option("--tol", full_tol, "relative objective tolerance [1e-10]");
  auto* o_full_step_tol = c_full->add_option("--step-tol", full_step_tol, "step tolerance [1e-12]");
  auto* o_full_seed = c_full->add_option("--seed", full_seed, "multistart seed [1]");

  // stabilize-d
  auto* c_stab = app.add_subcommand("stabilize-d", "median-alternation shared (alpha, D) across curve groups");
  std::string stab_input;
  int stab_max_rounds = 20, stab_multistart = 8, stab_max_iter = 500;
  double stab_round_tol = 1e-3, stab_init_alpha = 0.5, stab_init_d = 0.5;
  double stab_tol = 1e-10, stab_step_tol = 1e-12;
  std::uint64_t stab_seed = 1;
  auto* o_stab_input = c_stab->add_option("--input", stab_input, "observations CSV with a group column");
  auto* o_stab_max_rounds = c_stab->add_option("--max-rounds", stab_max_rounds, "round cap [20]");
  auto* o_stab_round_tol = c_stab->add_option("--round-tol", stab_round_tol, "per-round change tolerance [1e-3]");
  auto* o_stab_init_alpha = c_stab->add_option("--init-alpha", stab_init_alpha, "starting alpha [0.5]");
  auto* o_stab_init_d = c_stab->add_option("--init-d", stab_init_d, "starting D [0.5]");
  auto* o_stab_multistart = c_stab->add_option("--multistart", stab_multistart, "restarts per inner fit [8]");
  auto* o_stab_max_iter = c_stab->add_option("--max-iter", stab_max_iter, "inner iteration cap [500]");
  auto* o_stab_tol = c_stab->add_option("--tol", stab_tol, "inner objective tolerance [1e-10]");
  auto* o_stab_step_tol = c_stab->add_option("--step-tol", stab_step_tol, "inner step tolerance [1e-12]");
  auto* o_stab_seed = c_stab->add_option("--seed", stab_seed, "seed for inner multistarts [1]");

  // landscape
  auto* c_land = app.add_subcommand("landscape", "loss over an (alpha, D) grid with C profiled out");
  std::string land_input;
  double land_alpha_min = 0.05, land_alpha_max = 1.5, land_d_min = 0.05, land_d_max = 1.5;
  int land_alpha_steps = 61, land_d_steps = 61;
  auto* o_land_input = c_land->add_option("--input", land_input, "observations CSV");
  auto* o_land_amin = c_land->add_option("--alpha-min", land_alpha_min, "alpha axis start [0.05]");
  auto* o_land_amax = c_land->add_option("--alpha-max", land_alpha_max, "alpha axis end [1.5]");
  auto* o_land_asteps = c_land->add_option("--alpha-steps", land_alpha_steps, "alpha axis nodes [61]");
  auto* o_land_dmin = c_land->add_option("--d-min", land_d_min, "D axis start [0.05]");
  auto* o_land_dmax = c_land->add_option("--d-max", land_d_max, "D axis end [1.5]");
  auto* o_land_dsteps = c_land->add_option("--d-steps", land_d_steps, "D axis nodes [61]");

  // linearize
  auto* c_lin = app.add_subcommand("linearize", "subtract a fitted C and expose the residual power law");
  std::string lin_input;
  double lin_alpha = 0.0, lin_d = 0.0, lin_c = 0.0;
  auto* o_lin_input = c_lin->add_option("--input", lin_input, "observations CSV");
  auto* o_lin_alpha = c_lin->add_option("--alpha", lin_alpha, "fitted alpha");
  auto* o_lin_d = c_lin->add_option("--d", lin_d, "fitted D");
  auto* o_lin_c = c_lin->add_option("--c", lin_c, "fitted C to subtract");

  // simulate
  auto* c_sim = app.add_subcommand("simulate", "two-stage averaged-SGD transfer experiment");
  std::string sim_mode, sim_t0, sim_t1, sim_profile, sim_seeds;
  double sim_eta0 = 0.25, sim_eta1_base = 0.25, sim_zeta = 1.0 / 3.0;
  double sim_lambda0 = 0.0, sim_lambda1 = 0.0, sim_xi = 2.0, sim_scale = 1.0;
  double sim_r0 = 1.0, sim_r1 = 0.5, sim_phi1_scale = 0.5;
  int sim_modes = 32, sim_eval_q = 256, sim_width = 1024;
  auto* o_sim_mode = c_sim->add_option("--mode", sim_mode, "rkhs | network [rkhs]");
  auto* o_sim_t0 = c_sim->add_option("--t0-grid", sim_t0, "comma list of pre-training step counts");
  auto* o_sim_t1 = c_sim->add_option("--t1-grid", sim_t1, "comma list of fine-tuning step counts");
  auto* o_sim_eta0 = c_sim->add_option("--eta0", sim_eta0, "pre-training step size [0.25]");
  auto* o_sim_eta1_base = c_sim->add_option("--eta1-base", sim_eta1_base, "eta1 = base * T1^-zeta [0.25]");
  auto* o_sim_zeta = c_sim->add_option("--zeta", sim_zeta, "fine-tuning step decay [1/3]");
  auto* o_sim_lambda0 = c_sim->add_option("--lambda0", sim_lambda0, "override the tuned pre-training decay");
  auto* o_sim_lambda1 = c_sim->add_option("--lambda1", sim_lambda1, "override the tuned fine-tuning decay");
  auto* o_sim_xi = c_sim->add_option("--xi", sim_xi, "spectrum decay exponent [2]");
  auto* o_sim_modes = c_sim->add_option("--modes", sim_modes, "kernel modes [32]");
  auto* o_sim_scale = c_sim->add_option("--scale", sim_scale, "kernel scale [1]");
  auto* o_sim_r0 = c_sim->add_option("--r0", sim_r0, "source exponent of phi0 [1]");
  auto* o_sim_r1 = c_sim->add_option("--r1", sim_r1, "source exponent of the shift [0.5]");
  auto* o_sim_phi1_scale = c_sim->add_option("--phi1-scale", sim_phi1_scale, "shift amplitude [0.5]");
  auto* o_sim_profile = c_sim->add_option("--profile", sim_profile, "inverse | flat [inverse]");
  auto* o_sim_seeds = c_sim->add_option("--seeds", sim_seeds, "comma list of seeds [1..8]");
  auto* o_sim_eval_q = c_sim->add_option("--eval-q", sim_eval_q, "error quadrature points (network mode) [256]");
  auto* o_sim_width = c_sim->add_option("--width", sim_width, "network width (network mode) [1024]");

  // spectrum
  auto* c_spec = app.add_subcommand("spectrum", "integral-operator eigenvalues of a circle kernel");
  std::string spec_kernel;
  double spec_xi = 2.0, spec_scale = 1.0;
  int spec_modes = 32, spec_q = 256, spec_width = 1024;
  std::uint64_t spec_seed = 1;
  long long spec_mc = 1000000;
  auto* o_spec_kernel = c_spec->add_option("--kernel", spec_kernel, "designed | width | ntk [designed]");
  auto* o_spec_xi = c_spec->add_option("--xi", spec_xi, "designed decay exponent [2]");
  auto* o_spec_modes = c_spec->add_option("--modes", spec_modes, "designed mode count [32]");
  auto* o_spec_scale = c_spec->add_option("--scale", spec_scale, "designed scale [1]");
  auto* o_spec_q = c_spec->add_option("--q", spec_q, "grid resolution, power of two [256]");
  auto* o_spec_width = c_spec->add_option("--width", spec_width, "snapshot width (kernel=width) [1024]");
  auto* o_spec_seed = c_spec->add_option("--seed", spec_seed, "snapshot / Monte Carlo seed [1]");
  auto* o_spec_mc = c_spec->add_option("--mc-samples", spec_mc, "Monte Carlo draws (kernel=ntk) [1e6]");

  // rates
  auto* c_rates = app.add_subcommand("rates", "closed-form rate predictions for the two-stage pipeline");
  double rates_r0 = 0.5, rates_r1 = 0.5, rates_xi = 2.0, rates_zeta = 1.0 / 3.0;
  double rates_t0 = 0.0, rates_t1 = 0.0, rates_eta1 = 0.0, rates_lambda1 = 0.0, rates_r0_error = 0.0;
  auto* o_rates_r0 = c_rates->add_option("--r0", rates_r0, "source exponent of phi0");
  auto* o_rates_r1 = c_rates->add_option("--r1", rates_r1, "source exponent of the composite target");
  auto* o_rates_xi = c_rates->add_option("--xi", rates_xi, "spectrum decay exponent [2]");
  auto* o_rates_zeta = c_rates->add_option("--zeta", rates_zeta, "step-size decay [1/3]");
  auto* o_rates_t0 = c_rates->add_option("--t0", rates_t0, "also report the tuned lambda0 at this T0");
  auto* o_rates_t1 = c_rates->add_option("--t1", rates_t1, "bound-term table: steps");
  auto* o_rates_eta1 = c_rates->add_option("--eta1", rates_eta1, "bound-term table: step size");
  auto* o_rates_lambda1 = c_rates->add_option("--lambda1", rates_lambda1, "bound-term table: decay");
  auto* o_rates_r0_error = c_rates->add_option("--r0-error", rates_r0_error, "bound-term table: carried error");

  // complexity
  auto* c_cplx = app.add_subcommand("complexity", "negative entropy of a Gaussian fit to activations");
  std::string cplx_input;
  double cplx_eps = 0.0;
  auto* o_cplx_input = c_cplx->add_option("--input", cplx_input, "activation matrix CSV, headerless");
  auto* o_cplx_eps = c_cplx->add_option("--epsilon", cplx_eps,
                                        "covariance ridge; 0 forbids ridging [1e-6 * trace/d]");

  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    try {
      std::vector<std::string> argv_like = args;
      argv_like.insert(argv_like.begin(), "translaw");
      std::vector<const char*> argv;
      argv.reserve(argv_like.size());
      for (const auto& a : argv_like) argv.push_back(a.c_str());
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      const CLI::App* target = &app;
      for (const CLI::App* sub :
           app.get_subcommands([](const CLI::App* a) { return a->parsed(); }))
        target = sub;
      out << target->help();
      return 0;
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {  // --version style queries
        out << e.what() << "\n";
        return 0;
      }
      die("usage", e.what());
    }

    ConfigFile cfg;
    if (Scope::given(o_config)) {
      try {
        cfg = parse_config_file(f_config);
      } catch (const std::exception& e) {
        die("config", e.what());
      }
      validate_config(cfg);
    }

    // outdir precedence: flag > [global] outdir > environment > cwd
    Scope global{cfg, "global"};
    std::string env_outdir;
    if (const char* env = std::getenv("TRANSLAW_OUTDIR")) env_outdir = env;
    const std::string outdir =
        global.str(o_outdir, f_outdir, "outdir", env_outdir.empty() ? "." : env_outdir);
    const bool compact = global.boolean(o_compact, f_compact, "compact", false);

    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) die("io", outdir + ": cannot create output directory: " + ec.message());

    Ctx ctx{cfg, outdir, compact, out, {}};
    std::string command;
    json resolved;

    if (app.got_subcommand(c_fit)) {
      command = "fit";
      Scope sc{cfg, command};
      const std::string input = sc.str_required(o_fit_input, fit_input, "input");
      const bool free_d = sc.boolean(o_fit_free_d, fit_free_d, "free-d", false);
      const auto fixed_d = sc.opt_num(o_fit_fixed_d, fit_fixed_d, "fixed-d");
      const auto fixed_alpha = sc.opt_num(o_fit_fixed_alpha, fit_fixed_alpha, "fixed-alpha");
      if (Scope::given(o_fit_free_d) && Scope::given(o_fit_fixed_d))
        die("usage", "choose one of --free-d and --fixed-d");
      FitOptions fo = shared_fit_options(sc, o_fit_multistart, fit_multistart, o_fit_max_iter,
                                         fit_max_iter, o_fit_tol, fit_tol, o_fit_step_tol,
                                         fit_step_tol, o_fit_seed, fit_seed);
      if (!free_d) fo.fixed_D = fixed_d.value_or(0.48);
      fo.fixed_alpha = fixed_alpha;
      sc.resolved["effective-fixed-d"] = fo.fixed_D ? jnum(*fo.fixed_D) : json(nullptr);

      const auto obs = ingest(input);
      const FitReport rep = fit_simple(obs, fo);
      ctx.emit_json("fit_report.json", fit_report_json(rep, obs.size(), "simple"));

      std::vector<double> xs, ys;
      for (const auto& o : obs) {
        xs.push_back(double(o.n));
        ys.push_back(o.error);
      }
      const SimpleLawParams p = rep.simple();
      ctx.emit_plot("fit_plot.csv", curve_series("n", xs, ys,
                                                 [&](double n) { return simple_law_eval(p, n); },
                                                 129));
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_full)) {
      command = "fit-full";
      Scope sc{cfg, command};
      const std::string input = sc.str_required(o_full_input, full_input, "input");
      FitOptions fo = shared_fit_options(sc, o_full_multistart, full_multistart, o_full_max_iter,
                                         full_max_iter, o_full_tol, full_tol, o_full_step_tol,
                                         full_step_tol, o_full_seed, full_seed);
      fo.fix_eps_zero = !sc.boolean(o_full_free_eps, full_free_eps, "free-eps", false);

      const auto obs = ingest(input);
      const FitReport rep = fit_full(obs, fo);
      ctx.emit_json("fit_full_report.json", fit_report_json(rep, obs.size(), "full"));

      const FullLawParams p = rep.full();
      std::set<std::int64_t> s_values;
      for (const auto& o : obs) s_values.insert(o.s);
      for (const std::int64_t s : s_values) {
        std::vector<double> xs, ys;
        for (const auto& o : obs)
          if (o.s == s) {
            xs.push_back(double(o.n));
            ys.push_back(o.error);
          }
        ctx.emit_plot("fit_full_plot_s" + std::to_string(s) + ".csv",
                      curve_series("n", xs, ys,
                                   [&](double n) { return full_law_eval(p, n, double(s)); }, 129));
      }
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_stab)) {
      command = "stabilize-d";
      Scope sc{cfg, command};
      const std::string input = sc.str_required(o_stab_input, stab_input, "input");
      StabilizeOptions so;
      so.fit = shared_fit_options(sc, o_stab_multistart, stab_multistart, o_stab_max_iter,
                                  stab_max_iter, o_stab_tol, stab_tol, o_stab_step_tol,
                                  stab_step_tol, o_stab_seed, stab_seed);
      so.max_rounds = sc.integer(o_stab_max_rounds, stab_max_rounds, "max-rounds", so.max_rounds);
      so.round_tol = sc.num(o_stab_round_tol, stab_round_tol, "round-tol", so.round_tol);
      so.init_alpha = sc.num(o_stab_init_alpha, stab_init_alpha, "init-alpha", so.init_alpha);
      so.init_d = sc.num(o_stab_init_d, stab_init_d, "init-d", so.init_d);

      const auto obs = ingest(input);
      std::map<std::string, std::vector<Observation>> by_group;
      for (const auto& o : obs) by_group[o.group].push_back(o);
      std::vector<std::vector<Observation>> groups;
      json group_names = json::array();
      for (auto& [name, rows] : by_group) {
        group_names.push_back(name);
        groups.push_back(std::move(rows));
      }

      const StabilizeResult res = stabilize_d(groups, so);
      json rounds = json::array();
      std::ostringstream hist;
      hist << "round,alpha,d\n";
      for (std::size_t i = 0; i < res.rounds.size(); ++i) {
        const auto& r = res.rounds[i];
        json alphas = json::array(), ds = json::array();
        for (double a : r.alphas) alphas.push_back(jnum(a));
        for (double d : r.ds) ds.push_back(jnum(d));
        rounds.push_back({{"alpha", jnum(r.alpha_hat)},
                          {"d", jnum(r.d_hat)},
                          {"group_alphas", alphas},
                          {"group_ds", ds}});
        char line[80];
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", i + 1, r.alpha_hat, r.d_hat);
        hist << line;
      }
      ctx.emit_json("stabilize_report.json", json{{"alpha", jnum(res.alpha_hat)},
                                                  {"d", jnum(res.d_hat)},
                                                  {"converged", res.converged},
                                                  {"rounds", rounds},
                                                  {"groups", group_names},
                                                  {"warnings", res.warnings}});
      ctx.emit_text("stabilize_history.csv", hist.str());
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_land)) {
      command = "landscape";
      Scope sc{cfg, command};
      const std::string input = sc.str_required(o_land_input, land_input, "input");
      LandscapeOptions lo;
      lo.alpha_lo = sc.num(o_land_amin, land_alpha_min, "alpha-min", 0.05);
      lo.alpha_hi = sc.num(o_land_amax, land_alpha_max, "alpha-max", 1.5);
      lo.alpha_steps = sc.integer(o_land_asteps, land_alpha_steps, "alpha-steps", 61);
      lo.d_lo = sc.num(o_land_dmin, land_d_min, "d-min", 0.05);
      lo.d_hi = sc.num(o_land_dmax, land_d_max, "d-max", 1.5);
      lo.d_steps = sc.integer(o_land_dsteps, land_d_steps, "d-steps", 61);

      const auto obs = ingest(input);
      const Landscape surface = landscape(obs, lo);
      std::ostringstream table;
      table << "alpha,d,c,loss\n";
      for (int i = 0; i < surface.alpha_axis.size(); ++i)
        for (int j = 0; j < surface.d_axis.size(); ++j) {
          char line[140];
          std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n", surface.alpha_axis[i],
                        surface.d_axis[j], surface.c_opt(i, j), surface.loss(i, j));
          table << line;
        }
      ctx.emit_json("landscape_report.json",
                    json{{"argmin",
                          {{"alpha", jnum(surface.argmin.alpha)},
                           {"d", jnum(surface.argmin.D)},
                           {"c", jnum(surface.argmin.C)},
                           {"loss", jnum(surface.argmin.loss)}}},
                         {"alpha_axis", std::vector<double>(surface.alpha_axis.begin(),
                                                            surface.alpha_axis.end())},
                         {"d_axis",
                          std::vector<double>(surface.d_axis.begin(), surface.d_axis.end())},
                         {"observations", obs.size()}});
      ctx.emit_text("landscape.csv", table.str());
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_lin)) {
      command = "linearize";
      Scope sc{cfg, command};
      const std::string input = sc.str_required(o_lin_input, lin_input, "input");
      const auto alpha = sc.opt_num(o_lin_alpha, lin_alpha, "alpha");
      const auto dval = sc.opt_num(o_lin_d, lin_d, "d");
      const auto cval = sc.opt_num(o_lin_c, lin_c, "c");
      if (!alpha || !dval || !cval) die("usage", "linearize needs alpha, d and c");
      const SimpleLawParams p(*alpha, *dval, *cval);

      const auto obs = ingest(input);
      const Linearization lin = linearize(obs, p);
      std::vector<double> xs, ys;
      for (const auto& pt : lin.points) {
        xs.push_back(pt.n);
        ys.push_back(pt.value);
      }
      json fitj(nullptr);
      std::set<double> distinct(xs.begin(), xs.end());
      if (distinct.size() >= 2) {
        const LoglogFit ll = fit_loglog_linear(xs, ys);
        fitj = json{{"slope", jnum(ll.slope)},
                    {"intercept", jnum(ll.intercept)},
                    {"r2", jnum(ll.r2)}};
      }
      ctx.emit_json("linearize_report.json", json{{"points", xs.size()},
                                                  {"omitted", lin.omitted},
                                                  {"loglog", fitj},
                                                  {"alpha", jnum(*alpha)},
                                                  {"d", jnum(*dval)},
                                                  {"c", jnum(*cval)}});
      if (!xs.empty())
        ctx.emit_plot("linearize_plot.csv",
                      curve_series("n", xs, ys,
                                   [&](double n) { return *dval * std::pow(n, -*alpha); }, 129));
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_sim)) {
      command = "simulate";
      Scope sc{cfg, command};
      theory::TransferConfig tc;
      const std::string mode =
          sc.choice(o_sim_mode, sim_mode, "mode", "rkhs", {"rkhs", "network"});
      tc.mode = mode == "network" ? theory::TransferConfig::Mode::network
                                  : theory::TransferConfig::Mode::rkhs;
      tc.t0_grid = sc.int_list(o_sim_t0, sim_t0, "t0-grid", "128,256,512,1024,2048,4096", 0);
      tc.t1_grid = sc.int_list(o_sim_t1, sim_t1, "t1-grid", "64,128,256,512,1024", 0);
      tc.eta0 = sc.num(o_sim_eta0, sim_eta0, "eta0", tc.eta0);
      tc.eta1_base = sc.num(o_sim_eta1_base, sim_eta1_base, "eta1-base", tc.eta1_base);
      tc.zeta = sc.num(o_sim_zeta, sim_zeta, "zeta", tc.zeta);
      tc.lambda0 = sc.opt_num(o_sim_lambda0, sim_lambda0, "lambda0");
      tc.lambda1 = sc.opt_num(o_sim_lambda1, sim_lambda1, "lambda1");
      tc.xi = sc.num(o_sim_xi, sim_xi, "xi", tc.xi);
      tc.modes = sc.integer(o_sim_modes, sim_modes, "modes", tc.modes);
      tc.scale = sc.num(o_sim_scale, sim_scale, "scale", tc.scale);
      tc.targets.r0 = sc.num(o_sim_r0, sim_r0, "r0", tc.targets.r0);
      tc.targets.r1 = sc.num(o_sim_r1, sim_r1, "r1", tc.targets.r1);
      tc.targets.phi1_scale =
          sc.num(o_sim_phi1_scale, sim_phi1_scale, "phi1-scale", tc.targets.phi1_scale);
      tc.targets.profile =
          sc.choice(o_sim_profile, sim_profile, "profile", "inverse", {"inverse", "flat"}) ==
                  "flat"
              ? theory::TargetSpec::Profile::flat
              : theory::TargetSpec::Profile::inverse;
      tc.seeds = sc.u64_list(o_sim_seeds, sim_seeds, "seeds", "1,2,3,4,5,6,7,8");
      tc.eval_q = sc.integer(o_sim_eval_q, sim_eval_q, "eval-q", tc.eval_q);
      tc.m = sc.integer(o_sim_width, sim_width, "width", tc.m);

      const theory::TransferResult res = theory::transfer_experiment(tc);
      json rows = json::array();
      for (const auto& r : res.rows)
        rows.push_back({{"t0", r.t0},
                        {"t1", r.t1},
                        {"seed", r.seed},
                        {"error", jnum(r.error)},
                        {"r0_error", jnum(r.r0_error)},
                        {"lambda0", jnum(r.lambda0)},
                        {"lambda1", jnum(r.lambda1)},
                        {"eta1", jnum(r.eta1)}});
      ctx.emit_json("simulate_report.json", json{{"rows", rows}, {"warnings", res.warnings}});
      write_observations((ctx.outdir / "simulate_observations.csv").string(),
                         theory::to_observations(res));
      ctx.outputs.push_back("simulate_observations.csv");
      out << "wrote " << (ctx.outdir / "simulate_observations.csv").string() << "\n";
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_spec)) {
      command = "spectrum";
      Scope sc{cfg, command};
      const std::string kind =
          sc.choice(o_spec_kernel, spec_kernel, "kernel", "designed", {"designed", "width", "ntk"});
      const double xi = sc.num(o_spec_xi, spec_xi, "xi", 2.0);
      const int modes = sc.integer(o_spec_modes, spec_modes, "modes", 32);
      const double scale = sc.num(o_spec_scale, spec_scale, "scale", 1.0);
      const int q = sc.integer(o_spec_q, spec_q, "q", 256);
      const int width = sc.integer(o_spec_width, spec_width, "width", 1024);
      const std::uint64_t seed = sc.seed_val(o_spec_seed, spec_seed, "seed", 1);
      long long mc = spec_mc;
      if (const auto* e = sc.entry("mc-samples"); e && !Scope::given(o_spec_mc)) {
        if (!parse_i64_str(e->value, mc)) sc.bad("mc-samples", *e, "not an integer");
      }
      sc.resolved["mc-samples"] = mc;

      theory::KernelSpec kernel = theory::DesignedSpectrum{xi, modes, scale};
      if (kind == "width")
        kernel = theory::RandomFeature{
            std::make_shared<const theory::NetworkState>(theory::init_network(width, 2, seed))};
      else if (kind == "ntk")
        kernel = theory::NtkMonteCarlo{mc, seed};

      const theory::SpectrumReport rep = theory::spectrum(kernel, q);
      json evs = json::array();
      for (int i = 0; i < rep.eigenvalues.size(); ++i) evs.push_back(jnum(rep.eigenvalues[i]));
      ctx.emit_json("spectrum_report.json", json{{"kernel", kind},
                                                 {"eigenvalues", evs},
                                                 {"fitted_xi", jnum(rep.fitted_xi)},
                                                 {"fit_r2", jnum(rep.fit_r2)},
                                                 {"fit_window", {rep.fit_lo, rep.fit_hi}},
                                                 {"gram_fallback", rep.gram_fallback}});

      if (rep.fit_hi > rep.fit_lo) {
        std::vector<double> wx, wy;
        for (int i = rep.fit_lo; i <= rep.fit_hi; ++i) {
          wx.push_back(double(i));
          wy.push_back(rep.eigenvalues[i - 1]);
        }
        const LoglogFit ll = fit_loglog_linear(wx, wy);
        std::vector<double> xs, ys;
        for (int i = 0; i < rep.eigenvalues.size(); ++i) {
          xs.push_back(double(i + 1));
          ys.push_back(rep.eigenvalues[i]);
        }
        PlotSeries s;
        s.x_name = "index";
        s.x = xs;
        s.observed = ys;
        for (double x : xs)
          s.predicted.push_back(std::exp(ll.intercept + ll.slope * std::log(x)));
        ctx.emit_plot("spectrum_plot.csv", s);
      }
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_rates)) {
      command = "rates";
      Scope sc{cfg, command};
      const double r0 = sc.num(o_rates_r0, rates_r0, "r0", 0.5);
      const double r1 = sc.num(o_rates_r1, rates_r1, "r1", 0.5);
      const double xi = sc.num(o_rates_xi, rates_xi, "xi", 2.0);
      const double zeta = sc.num(o_rates_zeta, rates_zeta, "zeta", 1.0 / 3.0);
      const auto t0 = sc.opt_num(o_rates_t0, rates_t0, "t0");
      const auto t1 = sc.opt_num(o_rates_t1, rates_t1, "t1");
      const auto eta1 = sc.opt_num(o_rates_eta1, rates_eta1, "eta1");
      const auto lambda1 = sc.opt_num(o_rates_lambda1, rates_lambda1, "lambda1");
      const auto r0err = sc.opt_num(o_rates_r0_error, rates_r0_error, "r0-error");

      const theory::RatePrediction pred = theory::rate_predict(r0, r1, xi, zeta);
      json j{{"case", pred.case_label},
             {"condition_ok", pred.condition_ok},
             {"violated", pred.violated},
             {"lambda1_rule",
              {{"t1_exp", jnum(pred.lambda1_t1_exp)}, {"r0_exp", jnum(pred.lambda1_r0_exp)}}},
             {"error_exponents",
              {{"t1_exp", jnum(pred.t1_exp)},
               {"r0_exp", jnum(pred.r0_exp)},
               {"t0_exp", jnum(pred.t0_exp)}}},
             {"on_boundary", pred.on_boundary},
             {"pretrain_rate", jnum(theory::pretrain_rate(r0, xi))}};
      if (t0) j["optimal_lambda0"] = jnum(theory::optimal_lambda0(*t0, r0, xi));
      if (t1 || eta1 || lambda1 || r0err) {
        if (!(t1 && eta1 && lambda1 && r0err))
          die("usage", "bound terms need all of t1, eta1, lambda1 and r0-error");
        const theory::BoundTerms bt =
            theory::bound_terms(*t1, *lambda1, *eta1, xi, r0, r1, *r0err);
        json terms = json::array();
        for (const auto& t : bt.terms)
          terms.push_back({{"label", t.label}, {"value", jnum(t.value)}});
        j["bound_terms"] = {{"terms", terms},
                            {"dominant", bt.terms[bt.dominant].label},
                            {"total", jnum(bt.total)}};
        if (!theory::averaging_step_ok(*eta1, *lambda1))
          j["warnings"] = {"step size misses the sufficient averaging condition"};
      }
      ctx.emit_json("rates_report.json", j);
      resolved = sc.resolved;
    } else if (app.got_subcommand(c_cplx)) {
      command = "complexity";
      Scope sc{cfg, command};
      const std::string input = sc.str_required(o_cplx_input, cplx_input, "input");
      const auto eps = sc.opt_num(o_cplx_eps, cplx_eps, "epsilon");
      Eigen::MatrixXd data;
      try {
        data = read_activations(input);
      } catch (const std::exception& e) {
        die("data", e.what());
      }
      const EntropyReport rep =
          gaussian_negative_entropy(data, eps ? std::optional<double>(*eps) : std::nullopt);
      ctx.emit_json("complexity_report.json", json{{"neg_entropy", jnum(rep.neg_entropy)},
                                                   {"logdet", jnum(rep.logdet)},
                                                   {"epsilon", jnum(rep.epsilon)},
                                                   {"dims", rep.dims},
                                                   {"count", rep.count},
                                                   {"degenerate", rep.degenerate}});
      resolved = sc.resolved;
    }

    json manifest{{"command", command},
                  {"generated_at", utc_now()},
                  {"config_file", Scope::given(o_config) ? json(f_config) : json(nullptr)},
                  {"outdir", outdir},
                  {"global", global.resolved},
                  {"resolved", resolved},
                  {"outputs", ctx.outputs}};
    write_json_file(ctx.outdir / "manifest.json", manifest, compact);
    out << "wrote " << (ctx.outdir / "manifest.json").string() << "\n";
    return 0;
  } catch (const CliError& e) {
    err << "error: " << e.cls << ": " << e.what << "\n";
    return e.cls == "usage" ? 2 : 1;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: runtime: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace translaw::cli
