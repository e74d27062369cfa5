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

#include "cavsense/metrology.hpp"

#include <cmath>

namespace cavsense {

namespace {

double wrap_angle(double a) {
  double w = std::fmod(a, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  if (w >= 2.0 * kPi) w = 0.0;
  return w;
}

FockSpace fock_of(const SpaceId& s) {
  if (s.kind == SpaceId::Kind::spin) throw ValidationError("state has no cavity factor");
  return s.fock();
}

double top_population(const QuantumState& s, const FockSpace& fock, Index levels) {
  const Index df = fock.dim();
  const Index first = std::max<Index>(0, df - levels);
  const Index blocks = s.dim() / df;
  double pop = 0.0;
  for (Index k = 0; k < blocks; ++k) {
    for (Index n = first; n < df; ++n) {
      const Index i = k * df + n;
      pop += s.is_pure() ? std::norm(s.ket()(i)) : s.density()(i, i).real();
    }
  }
  return pop;
}

// Generator quadrature on the state's own space.
OperatorMatrix cavity_quadrature(const SpaceId& space, double theta) {
  const BosonOperators b = boson_operators(fock_of(space));
  OperatorMatrix x = b.quadrature(theta);
  if (space.kind == SpaceId::Kind::composite) x = embed(x, space.composite(), Factor::fock);
  x.hermitian = true;
  return x;
}

double quadrature_angle(double theta, QfiAngle convention) {
  return convention == QfiAngle::quadrature ? theta : quadrature_for_direction(theta);
}

}  // namespace

DisplacementSpec::DisplacementSpec(double magnitude, double angle) {
  if (!std::isfinite(magnitude) || magnitude < 0.0) {
    throw ValidationError("displacement magnitude must be finite and >= 0");
  }
  if (!std::isfinite(angle)) throw ValidationError("displacement angle must be finite");
  magnitude_ = magnitude;
  angle_ = wrap_angle(angle);
}

Mat displacement_matrix(cplx beta, const FockSpace& space) {
  const Index d = space.dim();
  if (beta == cplx(0.0)) return Mat::Identity(d, d);
  const BosonOperators b = boson_operators(space);
  // D = exp(-i G) with G = i (beta a^dag - beta* a) Hermitian.
  const Mat g = kI * (beta * b.a_dag.dense() - std::conj(beta) * b.a.dense());
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (g + g.adjoint()));
  const Vec phases = (cplx(0.0, -1.0) * eig.eigenvalues().cast<cplx>()).array().exp();
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

QuantumState apply_displacement(const QuantumState& state, const DisplacementSpec& d,
                                double tail_tolerance) {
  const FockSpace fock = fock_of(state.space());
  if (d.magnitude() == 0.0) return state;
  const Mat dm = displacement_matrix(d.value(), fock);
  const Index df = fock.dim();
  const Index blocks = state.dim() / df;

  QuantumState out = state;
  if (state.is_pure()) {
    Vec psi = state.ket();
    Eigen::Map<Mat> cols(psi.data(), df, blocks);
    cols = dm * cols;
    out = QuantumState::pure(state.space(), std::move(psi));
  } else {
    const Mat& rho = state.density();
    Mat res(rho.rows(), rho.cols());
    const Mat dm_adj = dm.adjoint();
    for (Index k = 0; k < blocks; ++k) {
      for (Index l = 0; l < blocks; ++l) {
        res.block(k * df, l * df, df, df).noalias() = dm * rho.block(k * df, l * df, df, df) * dm_adj;
      }
    }
    out = QuantumState::mixed(state.space(), std::move(res));
  }
  const double tail = top_population(out, fock, 5);
  if (tail > tail_tolerance) {
    throw CutoffError("cutoff too small after displacement: population " + std::to_string(tail) +
                      " in the top Fock levels at n_max=" + std::to_string(fock.n_max));
  }
  return out;
}

double quadrature_for_direction(double direction) { return wrap_angle(direction + 0.5 * kPi); }

double direction_for_quadrature(double quadrature_angle) {
  return wrap_angle(quadrature_angle - 0.5 * kPi);
}

double qfi_spectral(const QuantumState& state, double theta, QfiAngle convention,
                    double eig_floor) {
  const OperatorMatrix x = cavity_quadrature(state.space(), quadrature_angle(theta, convention));
  const Mat rho = state.density_matrix();
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (rho + rho.adjoint()));
  if (eig.info() != Eigen::Success) throw Error("qfi: eigendecomposition failed");
  const RealVec& lam = eig.eigenvalues();
  const Mat& v = eig.eigenvectors();
  const Mat xe = v.adjoint() * (x.entries * v);
  double f = 0.0;
  const Index n = lam.size();
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double s = lam(i) + lam(j);
      if (s <= eig_floor) continue;
      const double dl = lam(i) - lam(j);
      f += dl * dl / s * std::norm(xe(i, j));
    }
  }
  return 2.0 * f;
}

double qfi(const QuantumState& state, double theta, QfiAngle convention, double eig_floor) {
  if (!state.is_pure()) return qfi_spectral(state, theta, convention, eig_floor);
  const OperatorMatrix x = cavity_quadrature(state.space(), quadrature_angle(theta, convention));
  const double v = variance(x, state) / state.norm_or_trace();
  if (v < -1e-10) throw Error("qfi: negative variance " + std::to_string(v));
  return 4.0 * std::max(v, 0.0);
}

double qfi_toy_cat_analytic(double alpha0, double kappa, double t) {
  const double a2 = alpha0 * alpha0;
  return 4.0 + 16.0 * a2 * std::exp(-kappa * t) * std::exp(-4.0 * kappa * a2 * t);
}

double qfi_short_time_analytic(int n_atoms, double chi, double alpha, double t) {
  return 4.0 * (1.0 + n_atoms * chi * chi * alpha * alpha * t * t);
}

double qfi_plateau_analytic(double alpha) { return 4.0 + 8.0 * alpha * alpha; }

double gain_db(double delta_beta_sq) { return 10.0 * std::log10(0.25 / delta_beta_sq); }

SensitivityResult moment_sensitivity(const std::vector<double>& betas,
                                     const std::vector<double>& means, double variance_at_zero) {
  if (betas.size() != means.size()) throw ValidationError("moment_sensitivity: size mismatch");
  if (betas.size() < 3) throw ValidationError("moment_sensitivity: need at least 3 beta samples");
  bool neg = false, pos = false;
  for (double b : betas) {
    neg |= b < 0.0;
    pos |= b > 0.0;
  }
  if (!(neg && pos)) throw ValidationError("moment_sensitivity: beta samples must straddle 0");
  if (!(variance_at_zero >= 0.0)) throw ValidationError("moment_sensitivity: variance must be >= 0");

  const auto n = static_cast<double>(betas.size());
  double mb = 0.0, mm = 0.0;
  for (size_t i = 0; i < betas.size(); ++i) {
    mb += betas[i];
    mm += means[i];
  }
  mb /= n;
  mm /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < betas.size(); ++i) {
    sxy += (betas[i] - mb) * (means[i] - mm);
    sxx += (betas[i] - mb) * (betas[i] - mb);
  }
  const double slope = sxy / sxx;
  if (!(std::abs(slope) >= 1e-300)) throw InsensitiveObservable("insensitive observable: slope is zero");

  SensitivityResult r;
  r.slope = slope;
  r.variance = variance_at_zero;
  r.delta_beta_sq = variance_at_zero / (slope * slope);
  r.gain_db = gain_db(r.delta_beta_sq);
  return r;
}

AnalyticEstimate analytic_ideal_sensitivity(int n_atoms, double chi, double alpha, double tau) {
  if (n_atoms < 1 || !(chi > 0.0) || !(alpha > 0.0) || !(tau > 0.0)) {
    throw ValidationError("analytic_ideal_sensitivity: all parameters must be positive");
  }
  const double n = n_atoms;
  return {1.0 / (4.0 * n * chi * chi * tau * tau * alpha * alpha), tau > 1.0 / (chi * std::sqrt(n))};
}

AnalyticEstimate analytic_lossy_sensitivity(int n_atoms, double chi, double alpha, double kappa,
                                            double tau) {
  if (!(kappa >= 0.0)) throw ValidationError("analytic_lossy_sensitivity: kappa must be >= 0");
  AnalyticEstimate e = analytic_ideal_sensitivity(n_atoms, chi, alpha, tau);
  e.value += kappa * tau / 6.0;
  e.regime_warning = e.regime_warning || kappa * tau > 0.3;
  return e;
}

OptimumEstimate analytic_optimum(int n_atoms, double chi, double alpha, double kappa) {
  if (!(kappa > 0.0)) throw ValidationError("analytic_optimum: kappa must be > 0 (no finite optimum)");
  if (n_atoms < 1 || !(chi > 0.0) || !(alpha > 0.0)) {
    throw ValidationError("analytic_optimum: all parameters must be positive");
  }
  const double c = chi * chi * n_atoms * alpha * alpha;
  OptimumEstimate o;
  o.delta_beta_sq_opt = 0.25 * std::cbrt(3.0 * kappa * kappa / c);
  o.tau_opt = std::cbrt(3.0 / (kappa * c));
  o.fqi_opt_scale = std::cbrt(c / (kappa * kappa));
  o.t_opt_scale = std::cbrt(1.0 / (kappa * c));
  return o;
}

}  // namespace cavsense
