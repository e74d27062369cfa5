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

#include "cavsense/states.hpp"

#include <algorithm>
#include <cmath>

namespace cavsense {

namespace {

// Unrenormalized truncated coherent amplitudes and their norm deficit.
Vec raw_coherent(cplx alpha, Index dim) {
  Vec v = Vec::Zero(dim);
  const double mag = std::abs(alpha);
  if (mag == 0.0) {
    v(0) = 1.0;
    return v;
  }
  const double arg = std::arg(alpha);
  for (Index n = 0; n < dim; ++n) {
    const double dn = static_cast<double>(n);
    const double logmag = -0.5 * mag * mag + dn * std::log(mag) - 0.5 * std::lgamma(dn + 1.0);
    v(n) = std::polar(std::exp(logmag), dn * arg);
  }
  return v;
}

Mat hermitian_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  const RealVec ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
}

void require_composite(const QuantumState& s, const char* what) {
  if (s.space().kind != SpaceId::Kind::composite) {
    throw ValidationError(std::string(what) + ": state is not on a spin (x) fock space");
  }
}

}  // namespace

QuantumState QuantumState::pure(SpaceId space, Vec amplitudes) {
  if (amplitudes.size() != space.dim()) {
    throw ValidationError("state dimension does not match " + space.describe());
  }
  return {space, Kind::pure, std::move(amplitudes), Mat()};
}

QuantumState QuantumState::mixed(SpaceId space, Mat density) {
  if (density.rows() != space.dim() || density.cols() != space.dim()) {
    throw ValidationError("density matrix shape does not match " + space.describe());
  }
  return {space, Kind::mixed, Vec(), std::move(density)};
}

const Vec& QuantumState::ket() const {
  if (!is_pure()) throw ValidationError("ket() requested from a mixed state");
  return ket_;
}

const Mat& QuantumState::density() const {
  if (is_pure()) throw ValidationError("density() requested from a pure state");
  return rho_;
}

Mat QuantumState::density_matrix() const {
  return is_pure() ? Mat(ket_ * ket_.adjoint()) : rho_;
}

QuantumState QuantumState::to_mixed() const {
  return is_pure() ? mixed(space_, density_matrix()) : *this;
}

double QuantumState::norm_or_trace() const {
  return is_pure() ? ket_.squaredNorm() : rho_.trace().real();
}

cplx expectation(const OperatorMatrix& op, const QuantumState& state) {
  if (!(op.space == state.space())) {
    throw ValidationError("expectation: operator on " + op.space.describe() + ", state on " +
                          state.space().describe());
  }
  if (state.is_pure()) {
    const Vec& psi = state.ket();
    return psi.dot(op.entries * psi);
  }
  // tr(A rho) = sum_ij A_ij rho_ji
  const Mat& rho = state.density();
  cplx acc = 0.0;
  for (Index i = 0; i < op.entries.outerSize(); ++i) {
    for (SpMat::InnerIterator it(op.entries, i); it; ++it) acc += it.value() * rho(it.col(), it.row());
  }
  return acc;
}

double variance(const OperatorMatrix& op, const QuantumState& state) {
  const cplx mean = expectation(op, state);
  if (state.is_pure()) {
    const Vec a_psi = op.entries * state.ket();
    return a_psi.squaredNorm() - std::norm(mean);
  }
  const OperatorMatrix sq = op * op;
  return expectation(sq, state).real() - std::norm(mean);
}

double fidelity(const QuantumState& a, const QuantumState& b) {
  if (!(a.space() == b.space())) throw ValidationError("fidelity: states live on different spaces");
  if (a.is_pure() && b.is_pure()) return std::norm(a.ket().dot(b.ket()));
  if (a.is_pure()) return a.ket().dot(b.density() * a.ket()).real();
  if (b.is_pure()) return b.ket().dot(a.density() * b.ket()).real();
  const Mat sa = hermitian_sqrt(a.density());
  const Mat inner = sa * b.density() * sa;
  Eigen::SelfAdjointEigenSolver<Mat> eig(inner);
  const double root_sum = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return root_sum * root_sum;
}

double trace_distance(const QuantumState& a, const QuantumState& b) {
  if (!(a.space() == b.space())) {
    throw ValidationError("trace_distance: states live on different spaces");
  }
  const Mat diff = a.density_matrix() - b.density_matrix();
  Eigen::SelfAdjointEigenSolver<Mat> eig(diff, Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

QuantumState coherent_state(cplx alpha, const FockSpace& space) {
  Vec v = raw_coherent(alpha, space.dim());
  const double deficit = 1.0 - v.squaredNorm();
  if (deficit > 1e-8) {
    throw CutoffError("cutoff too small: coherent state |alpha|=" + std::to_string(std::abs(alpha)) +
                      " has norm deficit " + std::to_string(deficit) + " at n_max=" +
                      std::to_string(space.n_max));
  }
  v.normalize();
  return QuantumState::pure(SpaceId::of(space), std::move(v));
}

QuantumState initial_product_state(const CompositeSpace& space, cplx alpha) {
  const QuantumState field = coherent_state(alpha, space.fock);
  Vec psi = Vec::Zero(space.dim());
  // Lowest Dicke state |(-N/2)_z> is spin index 0.
  psi.head(space.fock.dim()) = field.ket();
  return QuantumState::pure(SpaceId::of(space), std::move(psi));
}

QuantumState bosonic_cat_state(cplx alpha0, const FockSpace& space) {
  const Vec plus = coherent_state(alpha0, space).ket();
  const Vec minus = coherent_state(-alpha0, space).ket();
  Vec cat = plus + minus;
  cat.normalize();
  return QuantumState::pure(SpaceId::of(space), std::move(cat));
}

QuantumState partial_trace_spin(const QuantumState& state) {
  require_composite(state, "partial_trace_spin");
  const CompositeSpace cs = state.space().composite();
  const Index ds = cs.spin.dim(), df = cs.fock.dim();
  if (state.is_pure()) {
    Eigen::Map<const Mat> psi(state.ket().data(), df, ds);
    return QuantumState::mixed(SpaceId::of(cs.fock), psi * psi.adjoint());
  }
  const Mat& rho = state.density();
  Mat out = Mat::Zero(df, df);
  for (Index k = 0; k < ds; ++k) out += rho.block(k * df, k * df, df, df);
  return QuantumState::mixed(SpaceId::of(cs.fock), std::move(out));
}

QuantumState partial_trace_fock(const QuantumState& state) {
  require_composite(state, "partial_trace_fock");
  const CompositeSpace cs = state.space().composite();
  const Index ds = cs.spin.dim(), df = cs.fock.dim();
  Mat out(ds, ds);
  if (state.is_pure()) {
    Eigen::Map<const Mat> psi(state.ket().data(), df, ds);
    out = psi.transpose() * psi.conjugate();
  } else {
    const Mat& rho = state.density();
    for (Index k = 0; k < ds; ++k) {
      for (Index l = 0; l < ds; ++l) out(k, l) = rho.block(k * df, l * df, df, df).trace();
    }
  }
  return QuantumState::mixed(SpaceId::of(cs.spin), std::move(out));
}

CoherentExpansion CoherentExpansion::superposition(std::vector<cplx> alphas, const Vec& amplitudes) {
  if (static_cast<Index>(alphas.size()) != amplitudes.size()) {
    throw ValidationError("superposition: amplitude count does not match branch count");
  }
  CoherentExpansion e{std::move(alphas), amplitudes * amplitudes.adjoint(), amplitudes};
  return e;
}

CoherentExpansion CoherentExpansion::mixture(std::vector<cplx> alphas, const RealVec& weights) {
  if (static_cast<Index>(alphas.size()) != weights.size()) {
    throw ValidationError("mixture: weight count does not match branch count");
  }
  return {std::move(alphas), weights.cast<cplx>().asDiagonal(), Vec()};
}

cplx CoherentExpansion::raw_trace() const {
  cplx tr = 0.0;
  const Index k = static_cast<Index>(alphas.size());
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      const cplx a = alphas[i], b = alphas[j];
      const cplx overlap = std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(b) * a);
      tr += coefficients(i, j) * overlap;
    }
  }
  return tr;
}

QuantumState CoherentExpansion::to_state(const FockSpace& space) const {
  const Index k = static_cast<Index>(alphas.size());
  Mat basis(space.dim(), k);
  for (Index i = 0; i < k; ++i) basis.col(i) = coherent_state(alphas[i], space).ket();
  if (amplitudes.size() == k && k > 0) {
    Vec psi = basis * amplitudes;
    psi.normalize();
    return QuantumState::pure(SpaceId::of(space), std::move(psi));
  }
  Mat rho = basis * coefficients * basis.adjoint();
  rho /= rho.trace().real();
  return QuantumState::mixed(SpaceId::of(space), std::move(rho));
}

CoherentExpansion AtomLightCat::cavity_superposition() const {
  return CoherentExpansion::superposition(branch_amplitudes, c.cast<cplx>());
}

CoherentExpansion AtomLightCat::cavity_mixture() const {
  return CoherentExpansion::mixture(branch_amplitudes, c.cwiseAbs2());
}

AtomLightCat atom_light_cat_state(int n_atoms, double alpha, double chi, double t,
                                  double margin_sigmas) {
  if (!(t >= 0.0)) throw ValidationError("atom_light_cat_state: t must be >= 0");
  const CompositeSpace space = build_composite_space(n_atoms, std::abs(alpha), margin_sigmas);
  const SxEigenbasis sxb = sx_eigenbasis(space.spin);
  const Index ds = space.spin.dim(), df = space.fock.dim();

  // c_m = <m_x|(-N/2)_z>: row 0 of the eigenvector matrix.
  const RealVec c = sxb.vectors.row(0).transpose();
  std::vector<cplx> branches(static_cast<size_t>(ds));
  Mat fock_columns(df, ds);
  for (Index j = 0; j < ds; ++j) {
    branches[j] = alpha * std::polar(1.0, -chi * sxb.m(j) * t);
    fock_columns.col(j) = coherent_state(branches[j], space.fock).ket();
  }
  // psi(k, n) = sum_j V(k, j) c_j coh_j(n); stored as the df x ds matrix psi(n, k).
  const Mat weighted = sxb.vectors.cast<cplx>() * c.cast<cplx>().asDiagonal();
  Mat psi_mat = fock_columns * weighted.transpose();
  Vec psi = Eigen::Map<Vec>(psi_mat.data(), space.dim());
  psi.normalize();
  return {space, QuantumState::pure(SpaceId::of(space), std::move(psi)), sxb.m, c,
          std::move(branches)};
}

}  // namespace cavsense
