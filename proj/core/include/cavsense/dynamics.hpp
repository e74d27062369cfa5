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

#ifndef CAVSENSE_DYNAMICS_HPP
#define CAVSENSE_DYNAMICS_HPP

#include <map>
#include <string>
#include <vector>

#include "cavsense/states.hpp"

namespace cavsense {

/// Parameters of one of the three spin-boson Hamiltonians.
///
///   dispersive:          chi a^dag a S_x
///   tavis_cummings:      g (a^dag S^- + a S^+) - delta_c a^dag a
///   resonant_effective:  g|alpha| S_x + (g/|alpha|) S_x a^dag a
///
/// `sign` multiplies the whole operator. For resonant_effective the Rabi term
/// g|alpha| S_x can be dropped with `rabi_term = false`.
struct HamiltonianSpec {
  enum class Variant : std::uint8_t { dispersive, tavis_cummings, resonant_effective };

  Variant variant = Variant::dispersive;
  double chi = 0.0;
  double g = 0.0;
  double delta_c = 0.0;
  double alpha_mag = 0.0;
  bool rabi_term = true;
  int sign = 1;

  static HamiltonianSpec dispersive(double chi);
  static HamiltonianSpec tavis_cummings(double g, double delta_c);
  static HamiltonianSpec resonant_effective(double g, double alpha_mag, bool rabi_term = true);

  /// Dispersive rate carried by this spec: chi, or g/|alpha| for resonant_effective.
  double effective_chi() const;

  void validate() const;
};

OperatorMatrix build_hamiltonian(const HamiltonianSpec& spec, const CompositeSpace& space);

/// Same spec with the sign flipped. Tavis-Cummings is rejected: it has no
/// global rotation that negates it.
HamiltonianSpec sign_reversed_hamiltonian(const HamiltonianSpec& spec);

/// exp(-i chi t a^dag a S_x) psi, applied as the phases e^{-i chi m n t} in the
/// S_x (x) Fock eigenbasis.
QuantumState evolve_dispersive_exact(const QuantumState& psi, double chi, double t);

struct IntegratorStats {
  long steps = 0;
  long rejected_steps = 0;
  double final_error_estimate = 0.0;
};

struct EvolutionResult {
  QuantumState final_state;
  std::vector<double> times;
  /// Expectation values sampled at `times`, keyed by observable name.
  std::map<std::string, std::vector<cplx>> traces;
  IntegratorStats stats;
  /// Largest |norm - 1| (unitary) or |trace - 1| (Lindblad) seen at a sample.
  double max_norm_drift = 0.0;
};

struct NamedObservable {
  std::string name;
  OperatorMatrix op;
};

struct UnitaryOptions {
  /// Error bound on ||psi(t) - exp(-iHt) psi|| over the whole interval.
  double tol = 1e-10;
  int krylov_dim = 30;
  long max_steps = 1000000;
  /// Sample points in (0, t]; t itself is always included.
  std::vector<double> sample_times;
  std::vector<NamedObservable> observables;
};

/// psi(t) = exp(-iHt) psi via Lanczos (Krylov) exponential action with
/// adaptive sub-stepping; the propagator is never formed.
EvolutionResult evolve_unitary(const OperatorMatrix& h, const QuantumState& psi, double t,
                               const UnitaryOptions& opts = {});

/// Jump operator L with rate gamma: gamma (L rho L^dag - {L^dag L, rho}/2).
struct JumpOperator {
  double rate = 0.0;
  OperatorMatrix op;
};

struct LindbladOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  /// 0 selects an initial step from the generator norm.
  double initial_step = 0.0;
  double min_step = 1e-14;
  long max_steps = 2000000;
  std::vector<double> sample_times;
  std::vector<NamedObservable> observables;
  /// Verify the smallest eigenvalue of the final state (skipped above this dimension).
  Index positivity_check_max_dim = 1024;
};

/// Dormand-Prince 5(4) with PI step control for
///   d rho/dt = -i[H, rho] + sum_k gamma_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2).
///
/// A diagonal H is integrated exactly (interaction picture) and only the
/// dissipator is left to the explicit pair; unitary-only problems with
/// diagonal H then take a single step.
///
/// Raises IntegrationError on step-size underflow, step budget exhaustion, or
/// detected stiffness.
EvolutionResult evolve_lindblad(const QuantumState& rho0, const OperatorMatrix& h,
                                const std::vector<JumpOperator>& jumps, double t,
                                const LindbladOptions& opts = {});

/// Photon loss at rate kappa on the cavity mode of the state's space.
EvolutionResult evolve_lindblad(const QuantumState& rho0, const OperatorMatrix& h, double kappa,
                                double t, const LindbladOptions& opts = {});

/// Cavity annihilation operator on whatever space the state lives on (fock or composite).
OperatorMatrix cavity_annihilation(const SpaceId& space);

/// Spin-trace comparison of Tavis-Cummings (delta_c = 0) against the
/// resonant-effective Hamiltonian, both started from |(-N/2)_z> (x) |alpha>.
struct EngineeringReport {
  int n_atoms = 0;
  double g = 0.0;
  double alpha = 0.0;
  double chi = 0.0;
  double t_max = 0.0;
  std::vector<double> times;
  /// [component][sample] with component 0,1,2 = x,y,z.
  std::vector<std::vector<double>> tc_lab, tc_phase_frame, resonant;
  /// max_t |<S_a>_TC - <S_a>_R| / (N/2) with TC spin operators dressed by the
  /// cavity phase, S^+ -> E S^+ (E the Susskind-Glogower lowering operator).
  double max_deviation[3] = {0.0, 0.0, 0.0};
  /// Same without the phase dressing.
  double max_deviation_lab[3] = {0.0, 0.0, 0.0};

  double worst() const;
};

/// Requires alpha^2 >= 10 N. t_max <= 0 selects 1/(chi sqrt(N)) with chi = g/alpha.
EngineeringReport validate_resonant_engineering(int n_atoms, double g, double alpha,
                                                double t_max = 0.0, int samples = 201);

}  // namespace cavsense

#endif  // CAVSENSE_DYNAMICS_HPP
