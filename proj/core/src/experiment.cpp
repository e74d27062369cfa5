// Copyright 2026 The cavsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cavsense/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "json.hpp"

namespace cavsense {

namespace {

using nlohmann::json;

constexpr double kKhzToRadPerS = 2.0 * kPi * 1e3;
constexpr const char* kCodeVersion = "0.1.0";

const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> names = {
      {"wigner", Command::wigner},         {"qfi", Command::qfi},
      {"protocol", Command::protocol},     {"scan_tau", Command::scan_tau},
      {"scan_n", Command::scan_n},         {"scan_kappa", Command::scan_kappa},
      {"figure3", Command::figure3},       {"validate_engineering", Command::validate_engineering}};
  return names;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "command", "n_atoms", "alpha", "chi", "g", "g_khz", "kappa", "kappa_khz", "gamma", "tau",
      "beta", "theta", "backend", "reversal", "include_rabi_term", "unitary_tol", "lindblad_rtol",
      "lindblad_atol", "margin_sigmas", "beta_values", "tau_grid", "n_values", "kappa_values",
      "kappa_values_khz", "kappa_opt_values", "kappa_opt_values_khz", "state", "times",
      "theta_values", "qfi_angle", "grid", "grid_points", "wigner_method", "t_max", "samples",
      "simulate", "format", "out", "seed", "threads"};
  return keys;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    v[static_cast<size_t>(i)] = std::pow(10.0, std::log10(lo) + f * (std::log10(hi) - std::log10(lo)));
  }
  return v;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

std::string join(const std::vector<double>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s + "]";
}

// Typed, key-naming access to one JSON object.
class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {}

  bool has(const std::string& key) const { return obj_.contains(key); }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  double number_in(const std::string& key, double lo, double hi, const char* range) const {
    const double d = number(key);
    if (d < lo || d > hi) fail(key, std::string("out of range, expected ") + range);
    return d;
  }

  long long integer(const std::string& key) const { return as_integer(key, at(key)); }

  bool boolean(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  // Either [v0, v1, ...] or {"min", "max", "points", "spacing": "linear"|"log"}.
  std::vector<double> grid(const std::string& key) const {
    const json& v = at(key);
    std::vector<double> out;
    if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_number()) fail(key, "array entries must be numbers");
        out.push_back(e.get<double>());
      }
    } else if (v.is_object()) {
      Reader r(v, prefix_ + key + ".");
      r.reject_unknown({"min", "max", "points", "spacing"});
      for (const char* k : {"min", "max", "points"}) {
        if (!r.has(k)) fail(key, std::string("missing required key '") + k + "'");
      }
      const double lo = r.number("min"), hi = r.number("max");
      const long long n = r.integer("points");
      if (n < 1 || n > 100000) fail(key + ".points", "out of range, expected 1..100000");
      const std::string spacing = r.has("spacing") ? r.text("spacing") : "linear";
      if (spacing == "log") {
        if (!(lo > 0.0) || !(hi > 0.0)) fail(key, "log spacing needs positive bounds");
        out = logspace(lo, hi, static_cast<int>(n));
      } else if (spacing == "linear") {
        out = linspace(lo, hi, static_cast<int>(n));
      } else {
        fail(key + ".spacing", "expected linear or log");
      }
    } else {
      fail(key, "expected an array or a {min, max, points} object");
    }
    for (double d : out) {
      if (!std::isfinite(d)) fail(key, "values must be finite");
    }
    if (out.empty()) fail(key, "must not be empty");
    return out;
  }

  const json& object(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_object()) fail(key, "expected an object");
    return v;
  }

  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : obj_.items()) {
      (void)v;
      if (!allowed.count(k)) throw ValidationError("unknown key '" + prefix_ + k + "'");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError("config key '" + prefix_ + key + "': " + what);
  }

 private:
  const json& at(const std::string& key) const {
    if (!obj_.contains(key)) fail(key, "missing");
    return obj_.at(key);
  }

  long long as_integer(const std::string& key, const json& v) const {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    fail(key, "expected an integer");
  }

  const json& obj_;
  std::string prefix_;
};

// Reads `key` in rad/s or `key_khz` in kHz (converted and logged).
std::optional<double> rate(const Reader& r, const std::string& key, std::ostream* log) {
  const bool plain = r.has(key), khz = r.has(key + "_khz");
  if (plain && khz) r.fail(key, "given both as " + key + " and " + key + "_khz");
  if (plain) return r.number(key);
  if (!khz) return std::nullopt;
  const double v = r.number(key + "_khz");
  const double out = v * kKhzToRadPerS;
  if (log) {
    *log << "qcli: " << key << "_khz=" << format_double(v) << " -> " << key << "=" << format_double(out)
         << " rad/s (x 2*pi*1e3)\n";
  }
  return out;
}

std::optional<std::vector<double>> rate_grid(const Reader& r, const std::string& key, std::ostream* log) {
  const bool plain = r.has(key), khz = r.has(key + "_khz");
  if (plain && khz) r.fail(key, "given both as " + key + " and " + key + "_khz");
  if (plain) return r.grid(key);
  if (!khz) return std::nullopt;
  std::vector<double> v = r.grid(key + "_khz");
  for (double& x : v) x *= kKhzToRadPerS;
  if (log) *log << "qcli: " << key << "_khz converted to rad/s (x 2*pi*1e3): " << join(v) << "\n";
  return v;
}

std::string backend_name(Backend b) { return b == Backend::unitary ? "unitary" : "lindblad"; }
std::string reversal_name(Reversal r) {
  return r == Reversal::negate_hamiltonian ? "negate_hamiltonian" : "z_rotation_sandwich";
}

void fill_echo(ExperimentConfig& c) {
  auto& e = c.echo;
  e.clear();
  auto num = [&](const char* k, double v) { e.emplace_back(k, format_double(v)); };
  e.emplace_back("command", to_string(c.command));
  e.emplace_back("n_atoms", std::to_string(c.n_atoms));
  num("alpha", c.alpha);
  num("chi", c.chi);
  e.emplace_back("g", c.g ? format_double(*c.g) : "none");
  num("kappa", c.kappa);
  num("gamma", c.gamma);
  num("tau", c.tau);
  num("beta", c.beta);
  num("theta", c.theta);
  e.emplace_back("backend", backend_name(c.backend));
  e.emplace_back("reversal", reversal_name(c.reversal));
  e.emplace_back("include_rabi_term", c.include_rabi_term ? "true" : "false");
  num("unitary_tol", c.unitary_tol);
  num("lindblad_rtol", c.lindblad_rtol);
  num("lindblad_atol", c.lindblad_atol);
  num("margin_sigmas", c.margin_sigmas);
  e.emplace_back("beta_values", c.beta_values.empty() ? "default" : join(c.beta_values));
  e.emplace_back("tau_grid", join(c.tau_grid));
  std::vector<double> nv(c.n_values.begin(), c.n_values.end());
  e.emplace_back("n_values", join(nv));
  e.emplace_back("kappa_values", join(c.kappa_values));
  e.emplace_back("kappa_opt_values", join(c.kappa_opt_values));
  e.emplace_back("state", c.state);
  e.emplace_back("times", join(c.times));
  e.emplace_back("theta_values", join(c.theta_values));
  e.emplace_back("qfi_angle", c.qfi_angle == QfiAngle::quadrature ? "quadrature" : "displacement_direction");
  if (c.grid) {
    e.emplace_back("grid", join({c.grid->x_min, c.grid->x_max, c.grid->p_min, c.grid->p_max,
                                 static_cast<double>(c.grid->nx), static_cast<double>(c.grid->np)}));
  } else {
    e.emplace_back("grid", "auto");
  }
  e.emplace_back("grid_points", std::to_string(c.grid_points));
  e.emplace_back("wigner_method", c.wigner_method);
  num("t_max", c.t_max);
  e.emplace_back("samples", std::to_string(c.samples));
  if (c.simulate_spec) {
    const SimulateSpec& s = *c.simulate_spec;
    e.emplace_back("simulate", "{n_atoms=" + std::to_string(s.n_atoms) + ",alpha=" + format_double(s.alpha) +
                                   ",chi=" + format_double(s.chi) + ",kappa_values=" + join(s.kappa_values) +
                                   ",tau_grid=" + join(s.tau_grid) + "}");
  } else {
    e.emplace_back("simulate", "none");
  }
  e.emplace_back("format", c.format);
  e.emplace_back("out", c.out.empty() ? "stdout" : c.out);
  e.emplace_back("seed", std::to_string(c.seed));
  e.emplace_back("threads", std::to_string(c.threads));
}

std::vector<std::string> required_keys(Command c, const std::string& state) {
  const std::string coupling = "chi|g|g_khz";
  switch (c) {
    case Command::protocol:
      return {"n_atoms", "alpha", coupling, "tau"};
    case Command::scan_tau:
      return {"n_atoms", "alpha", coupling, "tau_grid"};
    case Command::scan_n:
      return {"n_values", "alpha", coupling, "tau"};
    case Command::scan_kappa:
      return {"n_atoms", "alpha", coupling, "tau", "kappa_values|kappa_values_khz"};
    case Command::validate_engineering:
      return {"n_atoms", "alpha", "g|g_khz"};
    case Command::wigner:
    case Command::qfi:
      if (state == "atom_light_cat") return {"state", "alpha", "n_atoms", coupling, "times"};
      if (state == "toy_cat_lossy") return {"state", "alpha", "kappa|kappa_khz", "times"};
      return {"state", "alpha"};
    case Command::figure3:
      return {};
  }
  return {};
}

bool any_present(const Reader& r, const std::string& alternatives) {
  size_t start = 0;
  while (start <= alternatives.size()) {
    const size_t bar = alternatives.find('|', start);
    const std::string k = alternatives.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
    if (r.has(k)) return true;
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return false;
}

void add_echo(ResultTable& t, const ExperimentConfig& cfg) {
  t.add_metadata("code_version", kCodeVersion);
  for (const auto& [k, v] : cfg.echo) t.add_metadata(k, v);
}

std::string kappa_label(double kappa_rad_s) {
  const double khz = kappa_rad_s / kKhzToRadPerS;
  const double r = std::round(khz);
  if (std::abs(khz - r) < 1e-9 * std::max(1.0, std::abs(khz))) return std::to_string(static_cast<long long>(r));
  std::string s = format_double(khz);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

std::vector<double> sensitivity_row(double x, const SensitivityResult& s) {
  return {x,
          s.delta_beta_sq,
          s.gain_db,
          s.slope,
          s.variance,
          s.analytic_ideal.value_or(0.0),
          s.analytic_lossy.value_or(0.0)};
}

const std::vector<std::string> kSensitivityColumns = {"delta_beta_sq", "gain_db", "slope", "variance",
                                                      "analytic_ideal", "analytic_lossy"};

std::vector<std::string> with_first(const std::string& first, const std::vector<std::string>& rest) {
  std::vector<std::string> v{first};
  v.insert(v.end(), rest.begin(), rest.end());
  return v;
}

std::vector<double> beta_values_for(const ExperimentConfig& cfg, const ProtocolConfig& pc) {
  return cfg.beta_values.empty() ? default_beta_values(pc) : cfg.beta_values;
}

ResultTable run_wigner(const ExperimentConfig& cfg) {
  ResultTable t("wigner", {"t", "x", "p", "W"});
  add_echo(t, cfg);
  const bool closed = cfg.wigner_method == "closed_form";
  const GridSpec grid = cfg.grid ? *cfg.grid : GridSpec::around(cfg.alpha, cfg.grid_points);
  std::vector<double> times = cfg.state == "atom_light_cat" ? cfg.times : std::vector<double>{0.0};

  for (size_t ti = 0; ti < times.size(); ++ti) {
    WignerGrid w;
    if (cfg.state == "coherent" || cfg.state == "cat") {
      const FockSpace fock = build_fock_space(cfg.alpha, cfg.margin_sigmas);
      const bool cat = cfg.state == "cat";
      if (closed) {
        std::vector<cplx> alphas{cfg.alpha};
        if (cat) alphas.emplace_back(-cfg.alpha);
        w = wigner_closed_form(CoherentExpansion::superposition(alphas, Vec::Ones(cat ? 2 : 1)), grid);
      } else {
        w = wigner_parity(cat ? bosonic_cat_state(cfg.alpha, fock) : coherent_state(cfg.alpha, fock), grid);
      }
    } else if (cfg.state == "atom_light_cat") {
      const AtomLightCat cat = atom_light_cat_state(cfg.n_atoms, cfg.alpha, cfg.protocol_config().effective_chi(),
                                                    times[ti], cfg.margin_sigmas);
      w = closed ? wigner_closed_form(cat.cavity_mixture(), grid) : wigner_parity(partial_trace_spin(cat.state), grid);
    } else {
      throw ValidationError("config key 'state': wigner supports coherent, cat, atom_light_cat");
    }
    require_normalized(w);
    t.add_metadata("wigner_integral_" + std::to_string(ti), format_double(w.integral()));
    for (int i = 0; i < grid.nx; ++i) {
      for (int j = 0; j < grid.np; ++j) t.add_row({times[ti], grid.x(i), grid.p(j), w.values(i, j)});
    }
  }
  return t;
}

ResultTable run_qfi(const ExperimentConfig& cfg) {
  const ProtocolConfig pc = cfg.protocol_config();
  if (cfg.state == "coherent" || cfg.state == "cat") {
    ResultTable t("qfi", {"theta", "qfi"});
    add_echo(t, cfg);
    const FockSpace fock = build_fock_space(cfg.alpha, cfg.margin_sigmas);
    const QuantumState s = cfg.state == "cat" ? bosonic_cat_state(cfg.alpha, fock) : coherent_state(cfg.alpha, fock);
    for (double th : cfg.theta_values) t.add_row({th, qfi(s, th, cfg.qfi_angle)});
    return t;
  }
  if (cfg.state == "atom_light_cat") {
    ResultTable t("qfi", {"t", "chi_t_sqrt_n", "theta", "qfi", "qfi_short_time", "qfi_plateau"});
    add_echo(t, cfg);
    const double chi = pc.effective_chi();
    const double sqrt_n = std::sqrt(static_cast<double>(cfg.n_atoms));
    std::vector<std::vector<double>> rows(cfg.times.size() * cfg.theta_values.size());
    parallel_for(
        cfg.times.size(), cfg.threads,
        [&](size_t i) {
          const AtomLightCat cat = atom_light_cat_state(cfg.n_atoms, cfg.alpha, chi, cfg.times[i], cfg.margin_sigmas);
          for (size_t j = 0; j < cfg.theta_values.size(); ++j) {
            const double th = cfg.theta_values[j];
            rows[i * cfg.theta_values.size() + j] = {cfg.times[i], chi * cfg.times[i] * sqrt_n, th,
                                                     qfi(cat.state, th, cfg.qfi_angle),
                                                     qfi_short_time_analytic(cfg.n_atoms, chi, cfg.alpha, cfg.times[i]),
                                                     qfi_plateau_analytic(cfg.alpha)};
          }
        },
        [&](size_t i) { return "t=" + format_double(cfg.times[i]); });
    for (auto& r : rows) t.add_row(std::move(r));
    return t;
  }
  if (cfg.state == "toy_cat_lossy") {
    ResultTable t("qfi", {"t", "kappa_t", "theta", "qfi", "qfi_analytic"});
    add_echo(t, cfg);
    const FockSpace fock = build_fock_space(cfg.alpha, cfg.margin_sigmas);
    const QuantumState cat = bosonic_cat_state(cfg.alpha, fock).to_mixed();
    const OperatorMatrix zero = 0.0 * boson_operators(fock).n_op;
    std::vector<std::vector<double>> rows(cfg.times.size() * cfg.theta_values.size());
    parallel_for(
        cfg.times.size(), cfg.threads,
        [&](size_t i) {
          LindbladOptions o;
          o.rtol = cfg.lindblad_rtol;
          o.atol = cfg.lindblad_atol;
          const QuantumState rho = evolve_lindblad(cat, zero, cfg.kappa, cfg.times[i], o).final_state;
          for (size_t j = 0; j < cfg.theta_values.size(); ++j) {
            const double th = cfg.theta_values[j];
            rows[i * cfg.theta_values.size() + j] = {cfg.times[i], cfg.kappa * cfg.times[i], th,
                                                     qfi(rho, th, cfg.qfi_angle),
                                                     qfi_toy_cat_analytic(cfg.alpha, cfg.kappa, cfg.times[i])};
          }
        },
        [&](size_t i) { return "t=" + format_double(cfg.times[i]); });
    for (auto& r : rows) t.add_row(std::move(r));
    return t;
  }
  throw ValidationError("config key 'state': expected coherent, cat, atom_light_cat or toy_cat_lossy");
}

ResultTable run_single_protocol(const ExperimentConfig& cfg) {
  const ProtocolConfig pc = cfg.protocol_config();
  ResultTable t("protocol", {"beta", "theta", "sx", "sy", "sz", "var_sy", "fidelity", "delta_beta_sq",
                             "slope", "variance", "gain_db", "analytic_ideal", "analytic_lossy",
                             "semiclassical_sy"});
  add_echo(t, cfg);
  const ProtocolResult r = run_protocol(pc);
  const SensitivityResult s = beta_scan(pc, beta_values_for(cfg, pc), cfg.threads);
  const double chi = pc.effective_chi();
  t.add_row({cfg.beta, pc.displacement.angle(), r.sx, r.sy, r.sz, r.var_sy, r.fidelity, s.delta_beta_sq, s.slope,
             s.variance, s.gain_db, s.analytic_ideal.value_or(0.0), s.analytic_lossy.value_or(0.0),
             semiclassical_sy(cfg.n_atoms, chi, cfg.alpha, cfg.tau, cfg.beta, pc.displacement.angle())});
  return t;
}

ResultTable run_scan_tau(const ExperimentConfig& cfg) {
  const ProtocolConfig pc = cfg.protocol_config();
  ResultTable t("scan_tau", with_first("tau", kSensitivityColumns));
  add_echo(t, cfg);
  for (const TauPoint& p : scan_tau(pc, cfg.tau_grid, cfg.threads)) t.add_row(sensitivity_row(p.tau, p.result));
  return t;
}

ResultTable run_scan_n(const ExperimentConfig& cfg) {
  ResultTable t("scan_n", with_first("n_atoms", kSensitivityColumns));
  add_echo(t, cfg);
  std::vector<SensitivityResult> res(cfg.n_values.size());
  parallel_for(
      cfg.n_values.size(), cfg.threads,
      [&](size_t i) {
        ExperimentConfig c = cfg;
        c.n_atoms = cfg.n_values[i];
        const ProtocolConfig pc = c.protocol_config();
        res[i] = beta_scan(pc, beta_values_for(c, pc), 1);
      },
      [&](size_t i) { return "n_atoms=" + std::to_string(cfg.n_values[i]); });
  for (size_t i = 0; i < res.size(); ++i) t.add_row(sensitivity_row(cfg.n_values[i], res[i]));
  return t;
}

ResultTable run_scan_kappa(const ExperimentConfig& cfg) {
  ResultTable t("scan_kappa", with_first("kappa", kSensitivityColumns));
  add_echo(t, cfg);
  std::vector<SensitivityResult> res(cfg.kappa_values.size());
  parallel_for(
      cfg.kappa_values.size(), cfg.threads,
      [&](size_t i) {
        ExperimentConfig c = cfg;
        c.kappa = cfg.kappa_values[i];
        c.backend = Backend::lindblad;
        const ProtocolConfig pc = c.protocol_config();
        res[i] = beta_scan(pc, beta_values_for(c, pc), 1);
      },
      [&](size_t i) { return "kappa=" + format_double(cfg.kappa_values[i]); });
  for (size_t i = 0; i < res.size(); ++i) t.add_row(sensitivity_row(cfg.kappa_values[i], res[i]));
  return t;
}

ResultTable run_engineering(const ExperimentConfig& cfg) {
  const EngineeringReport rep =
      validate_resonant_engineering(cfg.n_atoms, cfg.g.value_or(cfg.chi * cfg.alpha), cfg.alpha, cfg.t_max, cfg.samples);
  ResultTable t("validate_engineering", {"t", "tc_x", "tc_y", "tc_z", "tc_lab_x", "tc_lab_y", "tc_lab_z", "r_x",
                                         "r_y", "r_z"});
  add_echo(t, cfg);
  const char* ax[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    t.add_metadata(std::string("max_deviation_") + ax[a], format_double(rep.max_deviation[a]));
    t.add_metadata(std::string("max_deviation_lab_") + ax[a], format_double(rep.max_deviation_lab[a]));
  }
  t.add_metadata("t_max_used", format_double(rep.t_max));
  t.add_metadata("worst_deviation", format_double(rep.worst()));
  t.add_metadata("within_5_percent", rep.worst() <= 0.05 ? "true" : "false");
  for (size_t i = 0; i < rep.times.size(); ++i) {
    t.add_row({rep.times[i], rep.tc_phase_frame[0][i], rep.tc_phase_frame[1][i], rep.tc_phase_frame[2][i],
               rep.tc_lab[0][i], rep.tc_lab[1][i], rep.tc_lab[2][i], rep.resonant[0][i], rep.resonant[1][i],
               rep.resonant[2][i]});
  }
  return t;
}

}  // namespace

Command parse_command(const std::string& s) {
  const auto it = command_names().find(s);
  if (it == command_names().end()) throw ValidationError("unknown command '" + s + "'");
  return it->second;
}

std::string to_string(Command c) {
  for (const auto& [k, v] : command_names()) {
    if (v == c) return k;
  }
  return "unknown";
}

ProtocolConfig ExperimentConfig::protocol_config() const {
  ProtocolConfig pc;
  pc.n_atoms = n_atoms;
  pc.alpha = alpha;
  pc.chi = chi;
  pc.g = g;
  pc.kappa = kappa;
  pc.gamma = gamma;
  pc.tau = tau;
  pc.displacement = DisplacementSpec(std::abs(beta), beta < 0.0 ? theta + kPi : theta);
  pc.backend = backend;
  pc.reversal = reversal;
  pc.include_rabi_term = include_rabi_term;
  pc.unitary_tol = unitary_tol;
  pc.lindblad_rtol = lindblad_rtol;
  pc.lindblad_atol = lindblad_atol;
  pc.margin_sigmas = margin_sigmas;
  return pc;
}

ExperimentConfig figure3_defaults() {
  ExperimentConfig c;
  c.command = Command::figure3;
  c.n_atoms = 500000;
  c.alpha = 100.0 * std::sqrt(500000.0);
  c.g = 2.0 * kPi * 11e3;
  c.chi = *c.g / c.alpha;
  c.kappa_values = {0.0, 2.0 * kPi * 15e3, 2.0 * kPi * 150e3};
  c.tau_grid = logspace(1e-8, 1e-5, 121);
  for (double n : logspace(1e3, 1e7, 41)) c.n_values.push_back(static_cast<int>(std::lround(n)));
  for (double k : logspace(1.0, 1000.0, 31)) c.kappa_opt_values.push_back(k * kKhzToRadPerS);
  return c;
}

ExperimentConfig parse_and_validate(const std::string& text, const std::optional<std::string>& command,
                                    std::ostream* log) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed config document: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("malformed config document: top level must be an object");
  const Reader r(doc, "");
  r.reject_unknown(known_keys());

  std::optional<Command> cmd;
  if (command) cmd = parse_command(*command);
  if (r.has("command")) {
    const Command in_doc = parse_command(r.text("command"));
    if (cmd && *cmd != in_doc) {
      r.fail("command", "document says '" + to_string(in_doc) + "' but '" + *command + "' was requested");
    }
    cmd = in_doc;
  }
  if (!cmd) throw ValidationError("no command given (positional argument or \"command\" key)");

  ExperimentConfig c = *cmd == Command::figure3 ? figure3_defaults() : ExperimentConfig{};
  c.command = *cmd;
  if (r.has("state")) c.state = r.text("state");

  std::vector<std::string> missing;
  for (const auto& req : required_keys(c.command, c.state)) {
    if (!any_present(r, req)) missing.push_back(req);
  }
  if (!missing.empty()) {
    std::string msg = "missing required keys for '" + to_string(c.command) + "':";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  if (r.has("gamma")) {
    c.gamma = r.number("gamma");
    if (c.gamma != 0.0) r.fail("gamma", "spontaneous emission not supported in this version");
  }
  if (r.has("n_atoms")) {
    const long long n = r.integer("n_atoms");
    if (n < 1 || n > 100000000) r.fail("n_atoms", "out of range, expected 1..1e8");
    c.n_atoms = static_cast<int>(n);
  }
  if (r.has("alpha")) {
    c.alpha = r.number_in("alpha", 0.0, 1e12, ">= 0");
  } else if (c.command == Command::figure3) {
    c.alpha = 100.0 * std::sqrt(static_cast<double>(c.n_atoms));
  }
  if (r.has("chi") && (r.has("g") || r.has("g_khz"))) r.fail("chi", "give either chi or g, not both");
  if (r.has("chi")) {
    c.chi = r.number("chi");
    c.g.reset();
  }
  if (auto g = rate(r, "g", log)) {
    c.g = *g;
    if (!(c.alpha > 0.0)) r.fail("g", "coupling given as g requires alpha > 0");
  }
  if (c.g) c.chi = *c.g / c.alpha;
  if (auto k = rate(r, "kappa", log)) {
    c.kappa = *k;
    if (c.kappa < 0.0) r.fail("kappa", "out of range, expected >= 0");
  }
  if (r.has("tau")) c.tau = r.number_in("tau", 1e-300, 1e300, "> 0");
  if (r.has("beta")) c.beta = r.number("beta");
  if (r.has("theta")) c.theta = r.number("theta");
  if (r.has("backend")) {
    const std::string b = r.text("backend");
    if (b == "unitary") {
      c.backend = Backend::unitary;
    } else if (b == "lindblad") {
      c.backend = Backend::lindblad;
    } else {
      r.fail("backend", "expected unitary or lindblad");
    }
  } else if (c.kappa > 0.0) {
    c.backend = Backend::lindblad;
  }
  if (r.has("reversal")) {
    const std::string v = r.text("reversal");
    if (v == "negate_hamiltonian") {
      c.reversal = Reversal::negate_hamiltonian;
    } else if (v == "z_rotation_sandwich") {
      c.reversal = Reversal::z_rotation_sandwich;
    } else {
      r.fail("reversal", "expected negate_hamiltonian or z_rotation_sandwich");
    }
  }
  if (r.has("include_rabi_term")) c.include_rabi_term = r.boolean("include_rabi_term");
  if (r.has("unitary_tol")) c.unitary_tol = r.number_in("unitary_tol", 1e-300, 1.0, "in (0, 1]");
  if (r.has("lindblad_rtol")) c.lindblad_rtol = r.number_in("lindblad_rtol", 1e-300, 1.0, "in (0, 1]");
  if (r.has("lindblad_atol")) c.lindblad_atol = r.number_in("lindblad_atol", 1e-300, 1.0, "in (0, 1]");
  if (r.has("margin_sigmas")) c.margin_sigmas = r.number_in("margin_sigmas", 6.0, 1e6, ">= 6");

  if (r.has("beta_values")) c.beta_values = r.grid("beta_values");
  if (r.has("tau_grid")) {
    c.tau_grid = r.grid("tau_grid");
    for (double x : c.tau_grid) {
      if (!(x > 0.0)) r.fail("tau_grid", "values must be > 0");
    }
  }
  if (r.has("n_values")) {
    c.n_values.clear();
    for (double x : r.grid("n_values")) {
      if (!(x >= 1.0) || x > 1e8) r.fail("n_values", "values must be in 1..1e8");
      c.n_values.push_back(static_cast<int>(std::lround(x)));
    }
  }
  if (auto k = rate_grid(r, "kappa_values", log)) c.kappa_values = *k;
  if (auto k = rate_grid(r, "kappa_opt_values", log)) c.kappa_opt_values = *k;
  for (double k : c.kappa_values) {
    if (!(k >= 0.0)) r.fail("kappa_values", "values must be >= 0");
  }
  for (double k : c.kappa_opt_values) {
    if (!(k > 0.0)) r.fail("kappa_opt_values", "values must be > 0");
  }

  if (r.has("times")) {
    c.times = r.grid("times");
    for (double x : c.times) {
      if (!(x >= 0.0)) r.fail("times", "values must be >= 0");
    }
  }
  if (r.has("theta_values")) c.theta_values = r.grid("theta_values");
  if (r.has("qfi_angle")) {
    const std::string a = r.text("qfi_angle");
    if (a == "quadrature") {
      c.qfi_angle = QfiAngle::quadrature;
    } else if (a == "displacement_direction") {
      c.qfi_angle = QfiAngle::displacement_direction;
    } else {
      r.fail("qfi_angle", "expected quadrature or displacement_direction");
    }
  }
  if (r.has("grid_points")) {
    const long long n = r.integer("grid_points");
    if (n < 1 || n > 4001) r.fail("grid_points", "out of range, expected 1..4001");
    c.grid_points = static_cast<int>(n);
  }
  if (r.has("grid")) {
    const Reader gr(r.object("grid"), "grid.");
    gr.reject_unknown({"x_min", "x_max", "p_min", "p_max", "nx", "np"});
    GridSpec gs;
    for (const char* k : {"x_min", "x_max", "p_min", "p_max"}) {
      if (!gr.has(k)) gr.fail(k, "missing");
    }
    gs.x_min = gr.number("x_min");
    gs.x_max = gr.number("x_max");
    gs.p_min = gr.number("p_min");
    gs.p_max = gr.number("p_max");
    if (!(gs.x_max > gs.x_min) || !(gs.p_max > gs.p_min)) gr.fail("x_max", "grid bounds must be increasing");
    gs.nx = gs.np = c.grid_points;
    if (gr.has("nx")) gs.nx = static_cast<int>(gr.integer("nx"));
    if (gr.has("np")) gs.np = static_cast<int>(gr.integer("np"));
    if (gs.nx < 1 || gs.np < 1 || gs.nx > 4001 || gs.np > 4001) gr.fail("nx", "out of range, expected 1..4001");
    c.grid = gs;
  }
  if (r.has("wigner_method")) {
    c.wigner_method = r.text("wigner_method");
    if (c.wigner_method != "parity" && c.wigner_method != "closed_form") {
      r.fail("wigner_method", "expected parity or closed_form");
    }
  }
  if (r.has("t_max")) c.t_max = r.number_in("t_max", 0.0, 1e300, ">= 0");
  if (r.has("samples")) {
    const long long n = r.integer("samples");
    if (n < 2 || n > 100000) r.fail("samples", "out of range, expected 2..100000");
    c.samples = static_cast<int>(n);
  }
  if (r.has("simulate")) {
    const Reader sr(r.object("simulate"), "simulate.");
    sr.reject_unknown({"n_atoms", "alpha", "chi", "kappa_values", "tau_grid"});
    SimulateSpec s;
    if (sr.has("n_atoms")) {
      const long long n = sr.integer("n_atoms");
      if (n < 1 || n > 32) sr.fail("n_atoms", "simulation is restricted to N <= 32");
      s.n_atoms = static_cast<int>(n);
    }
    if (sr.has("alpha")) s.alpha = sr.number_in("alpha", 1e-12, 1e3, "> 0");
    if (sr.has("chi")) s.chi = sr.number_in("chi", 1e-300, 1e300, "> 0");
    if (sr.has("kappa_values")) s.kappa_values = sr.grid("kappa_values");
    if (sr.has("tau_grid")) s.tau_grid = sr.grid("tau_grid");
    for (double k : s.kappa_values) {
      if (!(k >= 0.0)) sr.fail("kappa_values", "values must be >= 0");
    }
    for (double x : s.tau_grid) {
      if (!(x > 0.0)) sr.fail("tau_grid", "values must be > 0");
    }
    c.simulate_spec = s;
  }
  if (r.has("format")) {
    c.format = r.text("format");
    if (c.format != "csv" && c.format != "json") r.fail("format", "expected csv or json");
  }
  if (r.has("out")) c.out = r.text("out");
  if (r.has("seed")) {
    const long long s = r.integer("seed");
    if (s < 0) r.fail("seed", "must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (r.has("threads")) {
    const long long t = r.integer("threads");
    if (t < 0 || t > 256) r.fail("threads", "out of range, expected 0..256");
    c.threads = static_cast<unsigned>(t);
  }

  // Cross-field checks that do not need any allocation.
  const bool protocol_like = c.command == Command::protocol || c.command == Command::scan_tau ||
                             c.command == Command::scan_n || c.command == Command::scan_kappa;
  if (protocol_like) {
    if (c.backend == Backend::unitary && c.kappa > 0.0) r.fail("backend", "kappa > 0 requires the lindblad backend");
    if (c.command == Command::scan_tau && c.tau_grid.empty()) r.fail("tau_grid", "must not be empty");
  }
  if (c.command == Command::validate_engineering && c.alpha * c.alpha < 10.0 * c.n_atoms) {
    r.fail("alpha", "requires alpha^2 >= 10 N");
  }
  if ((c.command == Command::wigner || c.command == Command::qfi) && c.state != "coherent" && c.state != "cat" &&
      c.state != "atom_light_cat" && c.state != "toy_cat_lossy") {
    r.fail("state", "expected coherent, cat, atom_light_cat or toy_cat_lossy");
  }
  fill_echo(c);
  return c;
}

std::vector<ResultTable> run_figure3(const ExperimentConfig& cfg, bool simulate) {
  if (!cfg.g) throw ValidationError("figure3 needs the coupling as g (chi = g / alpha)");
  const double g = *cfg.g;
  const int n = cfg.n_atoms;
  const double alpha = cfg.alpha;
  const double chi = g / alpha;

  std::vector<std::string> cols{"tau_s"};
  for (double k : cfg.kappa_values) cols.push_back("gain_db_kappa" + kappa_label(k));
  ResultTable curves("gain_vs_tau", cols);
  add_echo(curves, cfg);
  for (double tau : cfg.tau_grid) {
    std::vector<double> row{tau};
    for (double k : cfg.kappa_values) row.push_back(gain_db(analytic_lossy_sensitivity(n, chi, alpha, k, tau).value));
    curves.add_row(std::move(row));
  }
  curves.add_metadata("ideal_validity_tau_s", format_double(1.0 / (chi * std::sqrt(static_cast<double>(n)))));
  for (double k : cfg.kappa_values) {
    if (k <= 0.0) continue;
    const OptimumEstimate o = analytic_optimum(n, chi, alpha, k);
    curves.add_metadata("tau_opt_s_kappa" + kappa_label(k), format_double(o.tau_opt));
    curves.add_metadata("gain_db_opt_kappa" + kappa_label(k), format_double(gain_db(o.delta_beta_sq_opt)));
  }

  std::vector<std::string> ncols{"n_atoms"};
  for (double k : cfg.kappa_values) {
    if (k <= 0.0) continue;
    ncols.push_back("tau_opt_s_kappa" + kappa_label(k));
    ncols.push_back("gain_db_opt_kappa" + kappa_label(k));
  }
  ResultTable vs_n("optimum_vs_n", ncols);
  add_echo(vs_n, cfg);
  for (int nn : cfg.n_values) {
    // alpha = 100 sqrt(N) as in the figure; chi alpha = g keeps the optimum alpha-free.
    const double a = 100.0 * std::sqrt(static_cast<double>(nn));
    std::vector<double> row{static_cast<double>(nn)};
    for (double k : cfg.kappa_values) {
      if (k <= 0.0) continue;
      const OptimumEstimate o = analytic_optimum(nn, g / a, a, k);
      row.push_back(o.tau_opt);
      row.push_back(gain_db(o.delta_beta_sq_opt));
    }
    vs_n.add_row(std::move(row));
  }

  ResultTable vs_k("optimum_vs_kappa", {"kappa_khz", "kappa_rad_s", "tau_opt_s", "delta_beta_sq_opt",
                                        "gain_db_opt", "alpha_independence_rel"});
  add_echo(vs_k, cfg);
  std::vector<double> kappas = cfg.kappa_opt_values;
  for (double k : cfg.kappa_values) {
    if (k > 0.0) kappas.push_back(k);
  }
  std::sort(kappas.begin(), kappas.end());
  kappas.erase(std::unique(kappas.begin(), kappas.end()), kappas.end());
  for (double k : kappas) {
    const OptimumEstimate o = analytic_optimum(n, chi, alpha, k);
    const double a2 = 7.0 * alpha;
    const OptimumEstimate o2 = analytic_optimum(n, g / a2, a2, k);
    const double rel = std::abs(o2.delta_beta_sq_opt - o.delta_beta_sq_opt) / o.delta_beta_sq_opt;
    vs_k.add_row({k / kKhzToRadPerS, k, o.tau_opt, o.delta_beta_sq_opt, gain_db(o.delta_beta_sq_opt), rel});
  }

  std::vector<ResultTable> out{std::move(curves), std::move(vs_n), std::move(vs_k)};
  if (simulate) {
    const SimulateSpec s = cfg.simulate_spec.value_or(SimulateSpec{});
    if (s.n_atoms > 32) throw ValidationError("simulate: restricted to N <= 32");
    ResultTable sim("simulated_overlay",
                    {"kappa", "tau", "delta_beta_sq_sim", "gain_db_sim", "delta_beta_sq_formula", "gain_db_formula"});
    add_echo(sim, cfg);
    struct Point {
      double kappa, tau;
    };
    std::vector<Point> pts;
    for (double k : s.kappa_values) {
      for (double t : s.tau_grid) pts.push_back({k, t});
    }
    std::vector<SensitivityResult> res(pts.size());
    parallel_for(
        pts.size(), cfg.threads,
        [&](size_t i) {
          ProtocolConfig pc;
          pc.n_atoms = s.n_atoms;
          pc.alpha = s.alpha;
          pc.chi = s.chi;
          pc.kappa = pts[i].kappa;
          pc.tau = pts[i].tau;
          pc.backend = pts[i].kappa > 0.0 ? Backend::lindblad : Backend::unitary;
          pc.lindblad_rtol = cfg.lindblad_rtol;
          pc.lindblad_atol = cfg.lindblad_atol;
          res[i] = beta_scan(pc, 1);
        },
        [&](size_t i) { return "kappa=" + format_double(pts[i].kappa) + ", tau=" + format_double(pts[i].tau); });
    for (size_t i = 0; i < pts.size(); ++i) {
      const double f = analytic_lossy_sensitivity(s.n_atoms, s.chi, s.alpha, pts[i].kappa, pts[i].tau).value;
      sim.add_row({pts[i].kappa, pts[i].tau, res[i].delta_beta_sq, res[i].gain_db, f, gain_db(f)});
    }
    out.push_back(std::move(sim));
  }
  return out;
}

std::vector<ResultTable> run_experiment(const ExperimentConfig& cfg, bool simulate) {
  if (simulate && cfg.command != Command::figure3) throw ValidationError("--simulate applies to figure3 only");
  switch (cfg.command) {
    case Command::wigner:
      return {run_wigner(cfg)};
    case Command::qfi:
      return {run_qfi(cfg)};
    case Command::protocol:
      return {run_single_protocol(cfg)};
    case Command::scan_tau:
      return {run_scan_tau(cfg)};
    case Command::scan_n:
      return {run_scan_n(cfg)};
    case Command::scan_kappa:
      return {run_scan_kappa(cfg)};
    case Command::figure3:
      return run_figure3(cfg, simulate);
    case Command::validate_engineering:
      return {run_engineering(cfg)};
  }
  throw Error("unhandled command");
}

}  // namespace cavsense
