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

#include <algorithm>
#include <cmath>

#include "cavsense/dynamics.hpp"

namespace cavsense {

namespace {

// Susskind-Glogower lowering operator: E|n> = |n-1>, E|0> = 0.
OperatorMatrix phase_lowering(const FockSpace& fock) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Index n = 1; n < fock.dim(); ++n) trip.emplace_back(n - 1, n, 1.0);
  SpMat e(fock.dim(), fock.dim());
  e.setFromTriplets(trip.begin(), trip.end());
  return {SpaceId::of(fock), std::move(e), false};
}

std::vector<std::vector<double>> real_traces(const EvolutionResult& r, const char* prefix) {
  std::vector<std::vector<double>> out(3);
  const char* axes[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    for (cplx v : r.traces.at(std::string(prefix) + axes[a])) out[a].push_back(v.real());
  }
  return out;
}

}  // namespace

double EngineeringReport::worst() const {
  return *std::max_element(std::begin(max_deviation), std::end(max_deviation));
}

EngineeringReport validate_resonant_engineering(int n_atoms, double g, double alpha, double t_max,
                                                int samples) {
  if (n_atoms < 1) throw ValidationError("validate_resonant_engineering: n_atoms must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("validate_resonant_engineering: alpha must be finite and > 0");
  }
  if (alpha * alpha < 10.0 * n_atoms) {
    throw ValidationError("validate_resonant_engineering: requires alpha^2 >= 10 N (got alpha^2=" +
                          std::to_string(alpha * alpha) + ", N=" + std::to_string(n_atoms) + ")");
  }
  if (!std::isfinite(g)) throw ValidationError("validate_resonant_engineering: g must be finite");
  if (samples < 2) throw ValidationError("validate_resonant_engineering: need at least 2 samples");

  EngineeringReport rep;
  rep.n_atoms = n_atoms;
  rep.g = g;
  rep.alpha = alpha;
  rep.chi = g / alpha;
  if (t_max <= 0.0) {
    if (g == 0.0) throw ValidationError("validate_resonant_engineering: t_max required when g = 0");
    t_max = 1.0 / (std::abs(rep.chi) * std::sqrt(static_cast<double>(n_atoms)));
  }
  rep.t_max = t_max;

  const CompositeSpace cs = build_composite_space(n_atoms, alpha);
  const SpinOperators s = collective_spin_operators(cs.spin);
  const OperatorMatrix e = embed(phase_lowering(cs.fock), cs, Factor::fock);
  const OperatorMatrix sp = embed(s.splus, cs, Factor::spin);
  const OperatorMatrix sm = embed(s.sminus, cs, Factor::spin);
  // Phase-dressed ladder operators: E S^+ and its adjoint.
  const OperatorMatrix dp = e * sp;
  const OperatorMatrix dm = dp.adjoint();
  OperatorMatrix dx = 0.5 * (dp + dm);
  OperatorMatrix dy = cplx(0.0, -0.5) * (dp - dm);
  dx.hermitian = dy.hermitian = true;

  const OperatorMatrix sx = embed(s.sx, cs, Factor::spin);
  const OperatorMatrix sy = embed(s.sy, cs, Factor::spin);
  const OperatorMatrix sz = embed(s.sz, cs, Factor::spin);

  std::vector<double> times;
  for (int i = 1; i < samples; ++i) times.push_back(t_max * i / (samples - 1));

  const QuantumState psi0 = initial_product_state(cs, alpha);

  UnitaryOptions tc_opts;
  tc_opts.sample_times = times;
  tc_opts.observables = {{"lab_x", sx}, {"lab_y", sy}, {"lab_z", sz},
                         {"dressed_x", dx}, {"dressed_y", dy}, {"dressed_z", sz}};
  const OperatorMatrix h_tc = build_hamiltonian(HamiltonianSpec::tavis_cummings(g, 0.0), cs);
  const EvolutionResult tc = evolve_unitary(h_tc, psi0, t_max, tc_opts);

  UnitaryOptions r_opts;
  r_opts.sample_times = times;
  r_opts.observables = {{"r_x", sx}, {"r_y", sy}, {"r_z", sz}};
  const OperatorMatrix h_r =
      build_hamiltonian(HamiltonianSpec::resonant_effective(g, alpha, true), cs);
  const EvolutionResult res = evolve_unitary(h_r, psi0, t_max, r_opts);

  // Prepend the t = 0 values, which evolve_unitary does not sample.
  const double z0 = -0.5 * n_atoms;
  rep.times.push_back(0.0);
  rep.times.insert(rep.times.end(), tc.times.begin(), tc.times.end());
  auto with_origin = [&](std::vector<std::vector<double>> tr) {
    tr[0].insert(tr[0].begin(), 0.0);
    tr[1].insert(tr[1].begin(), 0.0);
    tr[2].insert(tr[2].begin(), z0);
    return tr;
  };
  rep.tc_lab = with_origin(real_traces(tc, "lab_"));
  rep.tc_phase_frame = with_origin(real_traces(tc, "dressed_"));
  rep.resonant = with_origin(real_traces(res, "r_"));

  const double scale = 0.5 * n_atoms;
  for (int a = 0; a < 3; ++a) {
    for (size_t i = 0; i < rep.times.size(); ++i) {
      rep.max_deviation[a] = std::max(
          rep.max_deviation[a], std::abs(rep.tc_phase_frame[a][i] - rep.resonant[a][i]) / scale);
      rep.max_deviation_lab[a] =
          std::max(rep.max_deviation_lab[a], std::abs(rep.tc_lab[a][i] - rep.resonant[a][i]) / scale);
    }
  }
  return rep;
}

}  // namespace cavsense
