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

#ifndef CAVSENSE_SPACE_HPP
#define CAVSENSE_SPACE_HPP

#include <cstdint>

#include "cavsense/common.hpp"

namespace cavsense {

/// Symmetric Dicke manifold of N spin-1/2 atoms, total spin S = N/2.
///
/// Basis index k labels the S_z eigenvalue m_z = k - N/2, ascending.
struct SpinSpace {
  int n_atoms = 1;

  Index dim() const { return n_atoms + 1; }
  double total_spin() const { return 0.5 * n_atoms; }
  double m_of(Index k) const { return static_cast<double>(k) - total_spin(); }
};

/// Truncated bosonic mode with number states |0> .. |n_max>.
struct FockSpace {
  int n_max = 0;

  Index dim() const { return n_max + 1; }
};

/// spin (x) fock, spin index slow: index(k, n) = k * fock.dim() + n.
struct CompositeSpace {
  SpinSpace spin;
  FockSpace fock;

  Index dim() const { return spin.dim() * fock.dim(); }
  Index index(Index k, Index n) const { return k * fock.dim() + n; }
};

/// Identity of the space an operator or state lives on.
struct SpaceId {
  enum class Kind : std::uint8_t { spin, fock, composite };

  Kind kind = Kind::fock;
  int n_atoms = 0;
  int n_max = 0;

  static SpaceId of(const SpinSpace& s) { return {Kind::spin, s.n_atoms, 0}; }
  static SpaceId of(const FockSpace& f) { return {Kind::fock, 0, f.n_max}; }
  static SpaceId of(const CompositeSpace& c) {
    return {Kind::composite, c.spin.n_atoms, c.fock.n_max};
  }

  Index dim() const;
  SpinSpace spin() const { return {n_atoms}; }
  FockSpace fock() const { return {n_max}; }
  CompositeSpace composite() const { return {{n_atoms}, {n_max}}; }
  std::string describe() const;

  friend bool operator==(const SpaceId&, const SpaceId&) = default;
};

/// Complex operator on a declared space. Storage is always sparse.
struct OperatorMatrix {
  SpaceId space;
  SpMat entries;
  bool hermitian = false;

  Index dim() const { return entries.rows(); }
  Mat dense() const { return Mat(entries); }
  OperatorMatrix adjoint() const;

  /// max |A - A^dagger| over all entries.
  double hermiticity_defect() const;
};

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator*(cplx s, const OperatorMatrix& a);
OperatorMatrix operator*(double s, const OperatorMatrix& a);

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix identity_operator(const SpaceId& space);

/// Largest absolute entry of a - b.
double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b);

struct SpaceLimits {
  /// Largest composite dimension accepted by build_composite_space.
  Index max_dim = 65536;
};

/// Fock cutoff n_max = ceil(|alpha|^2 + margin_sigmas*|alpha| + 20).
int fock_cutoff(double alpha_mag, double margin_sigmas = 10.0);

/// Builds spin (x) fock with a cutoff sized for a coherent amplitude alpha_mag.
///
/// The cutoff is verified post hoc: the Poisson tail beyond n_max must be
/// below 1e-10, otherwise CutoffError is raised.
CompositeSpace build_composite_space(int n_atoms, double alpha_mag, double margin_sigmas = 10.0,
                                     SpaceLimits limits = {});

FockSpace build_fock_space(double alpha_mag, double margin_sigmas = 10.0);

/// Norm deficit 1 - sum_{n<=n_max} |<n|alpha>|^2 of a coherent state.
double coherent_norm_deficit(double alpha_mag, const FockSpace& fock);

struct SpinOperators {
  OperatorMatrix sx, sy, sz, splus, sminus;
};

SpinOperators collective_spin_operators(const SpinSpace& space);

struct BosonOperators {
  OperatorMatrix a, a_dag, n_op;

  /// X_theta = a e^{-i theta} + a^dagger e^{i theta}.
  OperatorMatrix quadrature(double theta) const;
};

BosonOperators boson_operators(const FockSpace& space);

enum class Factor : std::uint8_t { spin, fock };

/// Kronecker embedding into spin (x) fock with identity on the other factor.
OperatorMatrix embed(const OperatorMatrix& op, const CompositeSpace& target, Factor which);

enum class Axis : std::uint8_t { x, y, z };

/// exp(-i angle S_axis).
OperatorMatrix rotation_operator(const SpinSpace& space, Axis axis, double angle);

/// Eigenbasis of S_x, columns ordered by ascending eigenvalue m = -S..S.
///
/// Each eigenvector is real; its largest-magnitude component is made positive.
struct SxEigenbasis {
  RealVec m;
  RealMat vectors;
};

SxEigenbasis sx_eigenbasis(const SpinSpace& space);

}  // namespace cavsense

#endif  // CAVSENSE_SPACE_HPP
