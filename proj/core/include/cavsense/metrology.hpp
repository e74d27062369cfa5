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

#ifndef CAVSENSE_METROLOGY_HPP
#define CAVSENSE_METROLOGY_HPP

#include <optional>
#include <vector>

#include "cavsense/states.hpp"

namespace cavsense {

/// Cavity displacement beta = magnitude * e^{i angle}; angle kept in [0, 2 pi).
class DisplacementSpec {
 public:
  DisplacementSpec() = default;
  DisplacementSpec(double magnitude, double angle);

  double magnitude() const { return magnitude_; }
  double angle() const { return angle_; }
  cplx value() const { return std::polar(magnitude_, angle_); }

 private:
  double magnitude_ = 0.0;
  double angle_ = 0.0;
};

/// D(beta) = exp(beta a^dag - beta* a) on the cavity factor of a Fock or
/// composite state. Pure states stay pure; mixed states are conjugated.
///
/// Raises CutoffError if more than `tail_tolerance` of the population ends up
/// in the top five Fock levels.
QuantumState apply_displacement(const QuantumState& state, const DisplacementSpec& d,
                                double tail_tolerance = 1e-10);

/// Dense D(beta) on a Fock space.
Mat displacement_matrix(cplx beta, const FockSpace& space);

/// How the angle passed to qfi() is read.
///
/// quadrature:  generator X_theta = a e^{-i theta} + a^dag e^{i theta}.
/// displacement_direction:  sensitivity to D(b e^{i theta}) as a function of b,
///   whose generator is X_{theta + pi/2}.
enum class QfiAngle : std::uint8_t { quadrature, displacement_direction };

double quadrature_for_direction(double direction);
double direction_for_quadrature(double quadrature_angle);

/// Quantum Fisher information for a displacement generated by a cavity quadrature.
///
/// Pure: 4 Var(X). Mixed: 2 sum (l_i - l_j)^2 / (l_i + l_j) |<i|X|j>|^2 with
/// pairs l_i + l_j <= eig_floor dropped. Accepts Fock and composite states.
double qfi(const QuantumState& state, double theta, QfiAngle convention = QfiAngle::quadrature,
           double eig_floor = 1e-12);

/// The spectral formula regardless of purity; mainly for cross-checks.
double qfi_spectral(const QuantumState& state, double theta,
                    QfiAngle convention = QfiAngle::quadrature, double eig_floor = 1e-12);

/// 4 + 16 alpha0^2 e^{-kappa t} e^{-4 kappa alpha0^2 t}.
double qfi_toy_cat_analytic(double alpha0, double kappa, double t);

/// 4 (1 + N chi^2 alpha^2 t^2).
double qfi_short_time_analytic(int n_atoms, double chi, double alpha, double t);

/// 4 + 8 alpha^2.
double qfi_plateau_analytic(double alpha);

struct SensitivityResult {
  double delta_beta_sq = 0.0;
  double slope = 0.0;
  double variance = 0.0;
  double gain_db = 0.0;
  std::optional<double> analytic_ideal;
  std::optional<double> analytic_lossy;
  std::optional<double> tau;
};

/// 10 log10((1/4) / delta_beta_sq).
double gain_db(double delta_beta_sq);

/// Error propagation (d beta)^2 = Var(M) / (d<M>/d beta)^2 with the slope from
/// a least-squares line through (beta_k, mean_k).
SensitivityResult moment_sensitivity(const std::vector<double>& betas,
                                     const std::vector<double>& means, double variance_at_zero);

struct AnalyticEstimate {
  double value = 0.0;
  /// Set when the parameters are outside the formula's stated regime.
  bool regime_warning = false;
};

/// 1 / (4 N chi^2 tau^2 alpha^2); warns for tau > 1/(chi sqrt(N)).
AnalyticEstimate analytic_ideal_sensitivity(int n_atoms, double chi, double alpha, double tau);

/// Ideal value plus kappa tau / 6; warns for kappa tau > 0.3.
AnalyticEstimate analytic_lossy_sensitivity(int n_atoms, double chi, double alpha, double kappa,
                                            double tau);

struct OptimumEstimate {
  double delta_beta_sq_opt = 0.0;
  double tau_opt = 0.0;
  /// (chi^2 alpha^2 N / kappa^2)^{1/3}: scale of the optimal QFI excess over 4.
  double fqi_opt_scale = 0.0;
  /// (kappa chi^2 N alpha^2)^{-1/3}: scale of the time at which it is reached.
  double t_opt_scale = 0.0;
  /// The two scale fields carry no numerical prefactor.
  bool scale_prefactor_known = false;
};

/// Optimum of the lossy sensitivity over tau. kappa must be > 0.
OptimumEstimate analytic_optimum(int n_atoms, double chi, double alpha, double kappa);

}  // namespace cavsense

#endif  // CAVSENSE_METROLOGY_HPP
