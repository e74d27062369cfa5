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

#include "cavsense/space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace cavsense {

namespace {

SpMat sparse_from_dense(const Mat& m, double prune = 0.0) {
  SpMat out = m.sparseView(1.0, prune);
  out.makeCompressed();
  return out;
}

SpMat kron(const SpMat& a, const SpMat& b) {
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<size_t>(a.nonZeros() * b.nonZeros()));
  for (Index i = 0; i < a.outerSize(); ++i) {
    for (SpMat::InnerIterator ia(a, i); ia; ++ia) {
      for (Index j = 0; j < b.outerSize(); ++j) {
        for (SpMat::InnerIterator ib(b, j); ib; ++ib) {
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                             ia.value() * ib.value());
        }
      }
    }
  }
  SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpMat sparse_identity(Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

void require_same_space(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!(a.space == b.space) || a.dim() != b.dim()) {
    throw ValidationError("operator space mismatch: " + a.space.describe() + " vs " +
                          b.space.describe());
  }
}

}  // namespace

Index SpaceId::dim() const {
  switch (kind) {
    case Kind::spin:
      return n_atoms + 1;
    case Kind::fock:
      return n_max + 1;
    case Kind::composite:
      return static_cast<Index>(n_atoms + 1) * (n_max + 1);
  }
  return 0;
}

std::string SpaceId::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::spin:
      os << "spin(N=" << n_atoms << ")";
      break;
    case Kind::fock:
      os << "fock(n_max=" << n_max << ")";
      break;
    case Kind::composite:
      os << "spin(N=" << n_atoms << ")xfock(n_max=" << n_max << ")";
      break;
  }
  return os.str();
}

OperatorMatrix OperatorMatrix::adjoint() const {
  SpMat adj = entries.adjoint();
  adj.makeCompressed();
  return {space, std::move(adj), hermitian};
}

double OperatorMatrix::hermiticity_defect() const {
  SpMat diff = entries - SpMat(entries.adjoint());
  double worst = 0.0;
  for (Index i = 0; i < diff.outerSize(); ++i) {
    for (SpMat::InnerIterator it(diff, i); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b);
  return {a.space, a.entries + b.entries, a.hermitian && b.hermitian};
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b);
  return {a.space, a.entries - b.entries, a.hermitian && b.hermitian};
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b);
  SpMat prod = (a.entries * b.entries).pruned();
  return {a.space, std::move(prod), false};
}

OperatorMatrix operator*(cplx s, const OperatorMatrix& a) {
  return {a.space, s * a.entries, a.hermitian && s.imag() == 0.0};
}

OperatorMatrix operator*(double s, const OperatorMatrix& a) {
  return {a.space, cplx(s) * a.entries, a.hermitian};
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a * b - b * a;
}

OperatorMatrix identity_operator(const SpaceId& space) {
  return {space, sparse_identity(space.dim()), true};
}

double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b);
  SpMat diff = a.entries - b.entries;
  double worst = 0.0;
  for (Index i = 0; i < diff.outerSize(); ++i) {
    for (SpMat::InnerIterator it(diff, i); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

int fock_cutoff(double alpha_mag, double margin_sigmas) {
  return static_cast<int>(
      std::ceil(alpha_mag * alpha_mag + margin_sigmas * alpha_mag + 20.0));
}

double coherent_norm_deficit(double alpha_mag, const FockSpace& fock) {
  // Poisson(lambda) tail beyond n_max, summed term by term in log space.
  const double lambda = alpha_mag * alpha_mag;
  if (lambda == 0.0) return 0.0;
  double tail = 0.0;
  for (int n = fock.n_max + 1;; ++n) {
    const double term =
        std::exp(-lambda + n * std::log(lambda) - std::lgamma(static_cast<double>(n) + 1.0));
    tail += term;
    if (n > lambda && term < 1e-18 * std::max(tail, 1e-300)) break;
    if (term == 0.0 && n > lambda) break;
  }
  return tail;
}

FockSpace build_fock_space(double alpha_mag, double margin_sigmas) {
  if (!(alpha_mag >= 0.0) || !std::isfinite(alpha_mag)) {
    throw ValidationError("alpha magnitude must be finite and >= 0");
  }
  if (!(margin_sigmas >= 6.0)) throw ValidationError("cutoff margin must be >= 6 sigmas");
  FockSpace fock{fock_cutoff(alpha_mag, margin_sigmas)};
  if (coherent_norm_deficit(alpha_mag, fock) > 1e-10) {
    throw CutoffError("Fock cutoff n_max=" + std::to_string(fock.n_max) +
                      " leaves coherent norm deficit above 1e-10");
  }
  return fock;
}

CompositeSpace build_composite_space(int n_atoms, double alpha_mag, double margin_sigmas,
                                     SpaceLimits limits) {
  if (n_atoms <= 0) throw ValidationError("n_atoms must be >= 1");
  CompositeSpace space{{n_atoms}, build_fock_space(alpha_mag, margin_sigmas)};
  if (space.dim() > limits.max_dim) {
    throw SpaceTooLarge("space too large: dim " + std::to_string(space.dim()) + " exceeds cap " +
                        std::to_string(limits.max_dim));
  }
  return space;
}

SpinOperators collective_spin_operators(const SpinSpace& space) {
  if (space.n_atoms <= 0) throw ValidationError("n_atoms must be >= 1");
  const Index d = space.dim();
  const double s = space.total_spin();
  const SpaceId id = SpaceId::of(space);

  std::vector<Eigen::Triplet<cplx>> up, z;
  for (Index k = 0; k < d; ++k) {
    const double m = space.m_of(k);
    z.emplace_back(k, k, m);
    if (k + 1 < d) up.emplace_back(k + 1, k, std::sqrt(s * (s + 1.0) - m * (m + 1.0)));
  }
  SpMat sp(d, d), sz(d, d);
  sp.setFromTriplets(up.begin(), up.end());
  sz.setFromTriplets(z.begin(), z.end());
  SpMat sm = sp.adjoint();
  SpMat sx = cplx(0.5) * (sp + sm);
  SpMat sy = cplx(0.0, -0.5) * (sp - sm);

  return {{id, sx, true}, {id, sy, true}, {id, sz, true}, {id, sp, false}, {id, sm, false}};
}

OperatorMatrix BosonOperators::quadrature(double theta) const {
  const cplx phase = std::polar(1.0, theta);
  OperatorMatrix x{a.space, std::conj(phase) * a.entries + phase * a_dag.entries, true};
  return x;
}

BosonOperators boson_operators(const FockSpace& space) {
  if (space.n_max < 0) throw ValidationError("n_max must be >= 0");
  const Index d = space.dim();
  const SpaceId id = SpaceId::of(space);
  std::vector<Eigen::Triplet<cplx>> lower, num;
  for (Index n = 0; n < d; ++n) {
    num.emplace_back(n, n, static_cast<double>(n));
    if (n >= 1) lower.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  }
  SpMat a(d, d), nop(d, d);
  a.setFromTriplets(lower.begin(), lower.end());
  nop.setFromTriplets(num.begin(), num.end());
  SpMat ad = a.adjoint();
  return {{id, a, false}, {id, ad, false}, {id, nop, true}};
}

OperatorMatrix embed(const OperatorMatrix& op, const CompositeSpace& target, Factor which) {
  const SpaceId id = SpaceId::of(target);
  if (which == Factor::spin) {
    if (op.space.kind != SpaceId::Kind::spin || op.dim() != target.spin.dim()) {
      throw ValidationError("embed: operator does not live on the spin factor");
    }
    return {id, kron(op.entries, sparse_identity(target.fock.dim())), op.hermitian};
  }
  if (op.space.kind != SpaceId::Kind::fock || op.dim() != target.fock.dim()) {
    throw ValidationError("embed: operator does not live on the fock factor");
  }
  return {id, kron(sparse_identity(target.spin.dim()), op.entries), op.hermitian};
}

OperatorMatrix rotation_operator(const SpinSpace& space, Axis axis, double angle) {
  const SpinOperators ops = collective_spin_operators(space);
  const OperatorMatrix& gen = axis == Axis::x ? ops.sx : (axis == Axis::y ? ops.sy : ops.sz);
  Eigen::SelfAdjointEigenSolver<Mat> eig(gen.dense());
  const Vec phases =
      (eig.eigenvalues().cast<cplx>() * cplx(0.0, -angle)).array().exp().matrix();
  const Mat u = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
  return {SpaceId::of(space), sparse_from_dense(u, 1e-300), false};
}

SxEigenbasis sx_eigenbasis(const SpinSpace& space) {
  const SpinOperators ops = collective_spin_operators(space);
  const RealMat sx = ops.sx.dense().real();
  Eigen::SelfAdjointEigenSolver<RealMat> eig(sx);
  SxEigenbasis out{eig.eigenvalues(), eig.eigenvectors()};
  for (Index j = 0; j < out.m.size(); ++j) {
    // Exact eigenvalues are half-integers; remove solver noise.
    out.m(j) = std::round(2.0 * out.m(j)) / 2.0;
    auto col = out.vectors.col(j);
    const double top = col.cwiseAbs().maxCoeff();
    Index pick = 0;
    while (std::abs(col(pick)) < top * (1.0 - 1e-9)) ++pick;
    if (col(pick) < 0.0) col *= -1.0;
  }
  return out;
}

}  // namespace cavsense
