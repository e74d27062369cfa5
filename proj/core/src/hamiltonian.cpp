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

#include <cmath>

#include "cavsense/dynamics.hpp"

namespace cavsense {

HamiltonianSpec HamiltonianSpec::dispersive(double chi) {
  HamiltonianSpec s;
  s.variant = Variant::dispersive;
  s.chi = chi;
  return s;
}

HamiltonianSpec HamiltonianSpec::tavis_cummings(double g, double delta_c) {
  HamiltonianSpec s;
  s.variant = Variant::tavis_cummings;
  s.g = g;
  s.delta_c = delta_c;
  return s;
}

HamiltonianSpec HamiltonianSpec::resonant_effective(double g, double alpha_mag, bool rabi_term) {
  HamiltonianSpec s;
  s.variant = Variant::resonant_effective;
  s.g = g;
  s.alpha_mag = alpha_mag;
  s.rabi_term = rabi_term;
  return s;
}

double HamiltonianSpec::effective_chi() const {
  switch (variant) {
    case Variant::dispersive:
      return sign * chi;
    case Variant::resonant_effective:
      return sign * g / alpha_mag;
    case Variant::tavis_cummings:
      break;
  }
  throw ValidationError("Tavis-Cummings spec has no dispersive rate");
}

void HamiltonianSpec::validate() const {
  if (sign != 1 && sign != -1) throw ValidationError("hamiltonian sign must be +1 or -1");
  auto finite = [](double v) { return std::isfinite(v); };
  switch (variant) {
    case Variant::dispersive:
      if (!finite(chi)) throw ValidationError("dispersive: chi must be finite");
      if (g != 0.0 || delta_c != 0.0 || alpha_mag != 0.0) {
        throw ValidationError("dispersive: only chi may be set");
      }
      break;
    case Variant::tavis_cummings:
      if (!finite(g) || !finite(delta_c)) throw ValidationError("tavis_cummings: g, delta_c must be finite");
      if (chi != 0.0 || alpha_mag != 0.0) throw ValidationError("tavis_cummings: only g and delta_c may be set");
      break;
    case Variant::resonant_effective:
      if (!finite(g) || !finite(alpha_mag)) throw ValidationError("resonant_effective: g, alpha must be finite");
      if (!(alpha_mag > 0.0)) throw ValidationError("resonant_effective requires alpha_mag > 0");
      if (chi != 0.0 || delta_c != 0.0) throw ValidationError("resonant_effective: only g and alpha_mag may be set");
      break;
  }
}

OperatorMatrix build_hamiltonian(const HamiltonianSpec& spec, const CompositeSpace& space) {
  spec.validate();
  const SpinOperators s = collective_spin_operators(space.spin);
  const BosonOperators b = boson_operators(space.fock);
  const OperatorMatrix sx = embed(s.sx, space, Factor::spin);
  const OperatorMatrix n = embed(b.n_op, space, Factor::fock);

  OperatorMatrix h;
  switch (spec.variant) {
    case HamiltonianSpec::Variant::dispersive:
      h = spec.chi * (n * sx);
      break;
    case HamiltonianSpec::Variant::tavis_cummings: {
      const OperatorMatrix a = embed(b.a, space, Factor::fock);
      const OperatorMatrix ad = embed(b.a_dag, space, Factor::fock);
      const OperatorMatrix sp = embed(s.splus, space, Factor::spin);
      const OperatorMatrix sm = embed(s.sminus, space, Factor::spin);
      h = spec.g * (ad * sm + a * sp) - spec.delta_c * n;
      break;
    }
    case HamiltonianSpec::Variant::resonant_effective: {
      h = (spec.g / spec.alpha_mag) * (sx * n);
      if (spec.rabi_term) h = spec.g * spec.alpha_mag * sx + h;
      break;
    }
  }
  h = static_cast<double>(spec.sign) * h;
  h.entries.prune(cplx(0.0), 0.0);
  h.hermitian = true;
  return h;
}

HamiltonianSpec sign_reversed_hamiltonian(const HamiltonianSpec& spec) {
  if (spec.variant == HamiltonianSpec::Variant::tavis_cummings) {
    throw ValidationError("sign reversal is only defined for dispersive and resonant_effective");
  }
  HamiltonianSpec out = spec;
  out.sign = -spec.sign;
  return out;
}

QuantumState evolve_dispersive_exact(const QuantumState& psi, double chi, double t) {
  if (!psi.is_pure()) throw ValidationError("evolve_dispersive_exact needs a pure state");
  if (psi.space().kind != SpaceId::Kind::composite) {
    throw ValidationError("evolve_dispersive_exact needs a spin (x) fock state");
  }
  const CompositeSpace space = psi.space().composite();
  const Index ds = space.spin.dim(), df = space.fock.dim();
  const SxEigenbasis sxb = sx_eigenbasis(space.spin);
  const Mat v = sxb.vectors.cast<cplx>();

  Eigen::Map<const Mat> m(psi.ket().data(), df, ds);
  Mat mx = m * v;
  for (Index j = 0; j < ds; ++j) {
    for (Index n = 0; n < df; ++n) {
      mx(n, j) *= std::polar(1.0, -chi * sxb.m(j) * static_cast<double>(n) * t);
    }
  }
  Mat back = mx * v.transpose();
  return QuantumState::pure(psi.space(), Eigen::Map<Vec>(back.data(), space.dim()));
}

}  // namespace cavsense
