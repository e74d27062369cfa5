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

#ifndef CAVSENSE_PROTOCOL_HPP
#define CAVSENSE_PROTOCOL_HPP

#include <functional>
#include <optional>
#include <vector>

#include "cavsense/dynamics.hpp"
#include "cavsense/metrology.hpp"

namespace cavsense {

enum class Backend : std::uint8_t { unitary, lindblad };
enum class Reversal : std::uint8_t { negate_hamiltonian, z_rotation_sandwich };

/// Parameters of one run of the five-step interferometer: prepare, evolve with
/// H for tau, displace by beta, evolve with -H for tau, measure the spin.
struct ProtocolConfig {
  int n_atoms = 1;
  double alpha = 0.0;
  /// Dispersive rate. Ignored when `g` is set, in which case chi = g / alpha.
  double chi = 0.0;
  std::optional<double> g;
  double kappa = 0.0;
  /// Spontaneous emission. Reserved; only 0 is accepted.
  double gamma = 0.0;
  double tau = 0.0;
  DisplacementSpec displacement;
  Backend backend = Backend::unitary;
  Reversal reversal = Reversal::negate_hamiltonian;
  /// Use g|alpha| S_x + chi S_x a^dag a instead of the bare dispersive term.
  bool include_rabi_term = false;
  double unitary_tol = 1e-10;
  double lindblad_rtol = 1e-8;
  double lindblad_atol = 1e-10;
  double margin_sigmas = 10.0;

  double effective_chi() const;
  void validate() const;
};

struct ProtocolResult {
  double sx = 0.0, sy = 0.0, sz = 0.0;
  double var_sy = 0.0;
  /// Fidelity of the final state to the prepared state.
  double fidelity = 0.0;
  QuantumState final_state;
};

ProtocolResult run_protocol(const ProtocolConfig& cfg);

/// Lossy dispersive protocol from the closed-form solution: each S_x
/// coherence block stays a damped pair of coherent states. Requires the
/// bare dispersive Hamiltonian (include_rabi_term = false).
ProtocolResult run_protocol_closed_form(const ProtocolConfig& cfg);

/// Five points on [-beta_max, beta_max] with
/// beta_max = 0.02 / (chi alpha tau sqrt(N) + 1) clipped to [1e-4, 0.05].
std::vector<double> default_beta_values(const ProtocolConfig& cfg);

/// Runs the protocol at each beta (signed, along cfg's displacement angle) and
/// converts <S_y>(beta) and Var(S_y) at beta = 0 into a sensitivity. Points run
/// on `threads` workers (0 = hardware concurrency).
SensitivityResult beta_scan(const ProtocolConfig& cfg, const std::vector<double>& beta_values,
                            unsigned threads = 1);
SensitivityResult beta_scan(const ProtocolConfig& cfg, unsigned threads = 1);

/// E[cos(c X)] for X ~ Normal(0, var), by numerical quadrature.
double gaussian_average_cos(double c, double var);

/// Semiclassical <S_y> = (N/2) E[phi_tot], phi_tot = -2 chi alpha |beta| tau cos(theta + chi S_x tau)
/// with S_x Gaussian of variance N/4.
double semiclassical_sy(int n_atoms, double chi, double alpha, double tau, double beta,
                        double theta = 0.0);

/// True when |2 chi alpha beta tau| is small enough for the linearized prediction.
bool semiclassical_regime_ok(double chi, double alpha, double tau, double beta);

struct TauPoint {
  double tau = 0.0;
  SensitivityResult result;
};

struct TauOptimum {
  double tau_best = 0.0;
  SensitivityResult result_best;
  std::vector<TauPoint> grid;
  /// Closed-form optimum for comparison (only when kappa > 0).
  std::optional<OptimumEstimate> analytic;
};

/// beta_scan at every tau on the grid.
std::vector<TauPoint> scan_tau(const ProtocolConfig& cfg, const std::vector<double>& tau_grid,
                               unsigned threads = 1);

/// Grid scan followed by Brent refinement inside the bracketing cell.
/// Raises NotBracketed when the grid minimum sits on an endpoint.
TauOptimum optimize_tau(const ProtocolConfig& cfg, const std::vector<double>& tau_grid,
                        unsigned threads = 1, double rel_tol = 1e-3);

/// Runs fn(i) for i in [0, n) on a small worker pool. The first exception is
/// rethrown after all workers stop; `describe(i)` names the failed point.
void parallel_for(size_t n, unsigned threads, const std::function<void(size_t)>& fn,
                  const std::function<std::string(size_t)>& describe = {});

}  // namespace cavsense

#endif  // CAVSENSE_PROTOCOL_HPP
