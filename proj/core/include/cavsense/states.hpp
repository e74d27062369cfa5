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

#ifndef CAVSENSE_STATES_HPP
#define CAVSENSE_STATES_HPP

#include <vector>

#include "cavsense/space.hpp"

namespace cavsense {

/// Pure state vector or density matrix on a declared space.
class QuantumState {
 public:
  enum class Kind : std::uint8_t { pure, mixed };

  static QuantumState pure(SpaceId space, Vec amplitudes);
  static QuantumState mixed(SpaceId space, Mat density);

  Kind kind() const { return kind_; }
  bool is_pure() const { return kind_ == Kind::pure; }
  const SpaceId& space() const { return space_; }
  Index dim() const { return space_.dim(); }

  /// Amplitudes of a pure state. Throws ValidationError on a mixed state.
  const Vec& ket() const;
  /// Stored density matrix of a mixed state. Throws ValidationError on a pure state.
  const Mat& density() const;

  /// |psi><psi| for pure states, the stored matrix otherwise.
  Mat density_matrix() const;
  QuantumState to_mixed() const;

  /// ||psi||^2 for pure states, tr(rho) for mixed ones.
  double norm_or_trace() const;

 private:
  QuantumState(SpaceId space, Kind kind, Vec ket, Mat rho)
      : space_(space), kind_(kind), ket_(std::move(ket)), rho_(std::move(rho)) {}

  SpaceId space_;
  Kind kind_;
  Vec ket_;
  Mat rho_;
};

cplx expectation(const OperatorMatrix& op, const QuantumState& state);
double variance(const OperatorMatrix& op, const QuantumState& state);

/// Fidelity; for two pure states |<a|b>|^2, for pure/mixed <psi|rho|psi>.
/// Two mixed states use the Uhlmann form (tr sqrt(sqrt(a) b sqrt(a)))^2.
double fidelity(const QuantumState& a, const QuantumState& b);

/// Trace distance (1/2)||a - b||_1.
double trace_distance(const QuantumState& a, const QuantumState& b);

/// e^{-|alpha|^2/2} alpha^n / sqrt(n!), renormalized inside the cutoff.
///
/// Raises CutoffError if the deficit before renormalization exceeds 1e-8.
QuantumState coherent_state(cplx alpha, const FockSpace& space);

/// |(-N/2)_z> (x) |alpha>.
QuantumState initial_product_state(const CompositeSpace& space, cplx alpha);

/// (|alpha0> + |-alpha0>) / sqrt(2 + 2 e^{-2|alpha0|^2}).
QuantumState bosonic_cat_state(cplx alpha0, const FockSpace& space);

/// Tr_spin of a state on spin (x) fock, by block summation over the spin index.
QuantumState partial_trace_spin(const QuantumState& state);

/// Tr_fock of a state on spin (x) fock.
QuantumState partial_trace_fock(const QuantumState& state);

/// rho = sum_ij coefficients(i,j) |alphas_i><alphas_j| over normalized coherent
/// states, normalized to unit trace when evaluated.
struct CoherentExpansion {
  std::vector<cplx> alphas;
  Mat coefficients;
  /// Branch amplitudes when the expansion is a pure superposition; empty otherwise.
  Vec amplitudes;

  static CoherentExpansion superposition(std::vector<cplx> alphas, const Vec& amplitudes);
  static CoherentExpansion mixture(std::vector<cplx> alphas, const RealVec& weights);

  /// Trace of the unnormalized operator, sum_ij C_ij <alpha_j|alpha_i>.
  cplx raw_trace() const;
  QuantumState to_state(const FockSpace& space) const;
};

/// Sum_m c_m |m_x> (x) |alpha e^{-i chi m t}> built branch by branch.
struct AtomLightCat {
  CompositeSpace space;
  QuantumState state;
  /// S_x eigenvalues m, ascending.
  RealVec m;
  /// Expansion coefficients of |(-N/2)_z> in the S_x eigenbasis.
  RealVec c;

  /// Coherent amplitudes alpha e^{-i chi m t} of each branch.
  std::vector<cplx> branch_amplitudes;

  /// Cavity-only superposition sum_m c_m |alpha_m> (the "equivalent" cat).
  CoherentExpansion cavity_superposition() const;
  /// Reduced cavity state sum_m c_m^2 |alpha_m><alpha_m|.
  CoherentExpansion cavity_mixture() const;
};

AtomLightCat atom_light_cat_state(int n_atoms, double alpha, double chi, double t,
                                  double margin_sigmas = 10.0);

/// Uniform grid in gamma = x + i p.
struct GridSpec {
  double x_min = -5.0, x_max = 5.0;
  double p_min = -5.0, p_max = 5.0;
  int nx = 41, np = 41;

  /// +-(2|alpha| + 6) in both directions.
  static GridSpec around(double alpha_mag, int resolution = 41);

  double x(int i) const;
  double p(int j) const;
  double cell_area() const;
};

/// values(i, j) = W(x_i + i p_j); normalization: integral over d^2 gamma = 1.
struct WignerGrid {
  GridSpec grid;
  RealMat values;

  /// Riemann-sum integral over the grid.
  double integral() const;
};

enum class WignerMethod : std::uint8_t { parity, closed_form };

/// W(gamma) = (2/pi) tr[rho D(gamma) P D(gamma)^dagger], P the photon parity.
///
/// Accepts Fock states (pure or mixed); composite states are reduced over
/// the spin first. The trace only needs D(2 gamma) on the state's own
/// Fock block, so no enlarged space is required.
WignerGrid wigner_parity(const QuantumState& state, const GridSpec& grid);

/// Analytic Wigner function of a coherent-state expansion.
WignerGrid wigner_closed_form(const CoherentExpansion& expansion, const GridSpec& grid);

/// Raises ValidationError when the grid integral is off unity by more than tol.
void require_normalized(const WignerGrid& w, double tol = 0.02);

}  // namespace cavsense

#endif  // CAVSENSE_STATES_HPP
