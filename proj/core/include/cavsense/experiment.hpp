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

#ifndef CAVSENSE_EXPERIMENT_HPP
#define CAVSENSE_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cavsense/protocol.hpp"
#include "cavsense/table.hpp"

namespace cavsense {

enum class Command : std::uint8_t {
  wigner,
  qfi,
  protocol,
  scan_tau,
  scan_n,
  scan_kappa,
  figure3,
  validate_engineering
};

Command parse_command(const std::string& s);
std::string to_string(Command c);

/// Desk-scale overlay for figure3 --simulate.
struct SimulateSpec {
  int n_atoms = 8;
  double alpha = 4.0;
  double chi = 0.1;
  std::vector<double> kappa_values{0.0, 0.05};
  std::vector<double> tau_grid{0.25, 0.5, 1.0, 2.0, 3.0};
};

/// Validated experiment description. Rates are rad/s and times s; keys ending
/// in _khz are converted on input by 2 pi 10^3.
struct ExperimentConfig {
  Command command = Command::protocol;

  int n_atoms = 8;
  double alpha = 4.0;
  double chi = 0.1;
  std::optional<double> g;
  double kappa = 0.0;
  double gamma = 0.0;
  double tau = 0.5;
  double beta = 0.01;
  double theta = 0.0;
  Backend backend = Backend::unitary;
  Reversal reversal = Reversal::negate_hamiltonian;
  bool include_rabi_term = false;
  double unitary_tol = 1e-10;
  double lindblad_rtol = 1e-8;
  double lindblad_atol = 1e-10;
  double margin_sigmas = 10.0;

  std::vector<double> beta_values;
  std::vector<double> tau_grid;
  std::vector<int> n_values;
  std::vector<double> kappa_values;
  /// Second kappa grid, used by figure3 for the optimum-vs-kappa table.
  std::vector<double> kappa_opt_values;

  /// wigner / qfi state: coherent | cat | atom_light_cat | toy_cat_lossy.
  std::string state = "coherent";
  std::vector<double> times{0.0};
  std::vector<double> theta_values{0.0};
  QfiAngle qfi_angle = QfiAngle::quadrature;
  std::optional<GridSpec> grid;
  int grid_points = 41;
  std::string wigner_method = "parity";

  double t_max = 0.0;
  int samples = 201;

  std::optional<SimulateSpec> simulate_spec;

  std::string format = "csv";
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  /// Every key after defaults, as (key, value) text, for table metadata.
  std::vector<std::pair<std::string, std::string>> echo;

  ProtocolConfig protocol_config() const;
};

/// Strict parser: unknown keys, missing required keys, bad types and
/// out-of-range values raise ValidationError naming the key. `command`
/// overrides or must match the document's "command" key. Unit conversions
/// are reported on `log` when given.
ExperimentConfig parse_and_validate(const std::string& text,
                                    const std::optional<std::string>& command = std::nullopt,
                                    std::ostream* log = nullptr);

/// Executes the command. The first table is the primary output.
std::vector<ResultTable> run_experiment(const ExperimentConfig& cfg, bool simulate = false);

/// Formula-mode gain curves plus optimum tables; `simulate` adds a desk-scale
/// overlay (N <= 32).
std::vector<ResultTable> run_figure3(const ExperimentConfig& cfg, bool simulate = false);

/// Large-ensemble figure3 defaults: N = 5e5, alpha = 100 sqrt(N), g = 2 pi 11 kHz.
ExperimentConfig figure3_defaults();

}  // namespace cavsense

#endif  // CAVSENSE_EXPERIMENT_HPP
