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

#include <benchmark/benchmark.h>

#include "cavsense/metrology.hpp"
#include "cavsense/protocol.hpp"

namespace {

using namespace cavsense;

void BM_EvolveUnitaryDispersive(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CompositeSpace cs = build_composite_space(n, 4.0);
  const OperatorMatrix h = build_hamiltonian(HamiltonianSpec::dispersive(0.1), cs);
  const QuantumState psi = initial_product_state(cs, 4.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evolve_unitary(h, psi, 0.5));
  }
  state.SetLabel("dim=" + std::to_string(cs.dim()));
}
BENCHMARK(BM_EvolveUnitaryDispersive)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_EvolveLindbladDispersive(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CompositeSpace cs = build_composite_space(n, 4.0);
  const OperatorMatrix h = build_hamiltonian(HamiltonianSpec::dispersive(0.1), cs);
  const QuantumState rho = initial_product_state(cs, 4.0).to_mixed();
  for (auto _ : state) {
    benchmark::DoNotOptimize(evolve_lindblad(rho, h, 0.05, 0.5));
  }
}
BENCHMARK(BM_EvolveLindbladDispersive)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_WignerParity(benchmark::State& state) {
  const FockSpace fock = build_fock_space(2.0);
  const QuantumState cat = bosonic_cat_state(2.0, fock);
  const GridSpec grid = GridSpec::around(2.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wigner_parity(cat, grid));
  }
}
BENCHMARK(BM_WignerParity)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

void BM_QfiSpectral(benchmark::State& state) {
  const AtomLightCat cat = atom_light_cat_state(static_cast<int>(state.range(0)), 4.0, 0.1, 1.0);
  const QuantumState rho = cat.state.to_mixed();
  for (auto _ : state) {
    benchmark::DoNotOptimize(qfi(rho, 0.0));
  }
}
BENCHMARK(BM_QfiSpectral)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_BetaScanUnitary(benchmark::State& state) {
  ProtocolConfig cfg;
  cfg.n_atoms = 8;
  cfg.alpha = 4.0;
  cfg.chi = 0.1;
  cfg.tau = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(beta_scan(cfg));
  }
}
BENCHMARK(BM_BetaScanUnitary)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
