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

#include <gtest/gtest.h>

#include "cavsense/dynamics.hpp"
#include "cavsense/states.hpp"
#include "oracles.hpp"

namespace cavsense {
namespace {

TEST(CoherentState, MatchesRecursionOracle) {
  for (cplx a : {cplx(0.0), cplx(1.5, 0.0), cplx(-2.0, 1.0), cplx(0.3, -3.2)}) {
    const FockSpace f = build_fock_space(std::abs(a));
    const Vec psi = coherent_state(a, f).ket();
    Vec ref = oracle::coherent(a, f.n_max);
    ref.normalize();
    EXPECT_NEAR(std::norm(psi.dot(ref)), 1.0, 1e-12);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
  }
}

TEST(CoherentState, RejectsTooSmallCutoff) {
  EXPECT_THROW(coherent_state(5.0, FockSpace{10}), CutoffError);
}

TEST(CoherentState, MeanPhotonNumber) {
  const cplx a(2.0, -1.0);
  const FockSpace f = build_fock_space(std::abs(a));
  const QuantumState s = coherent_state(a, f);
  EXPECT_NEAR(expectation(boson_operators(f).n_op, s).real(), std::norm(a), 1e-9);
  EXPECT_NEAR(variance(boson_operators(f).n_op, s), std::norm(a), 1e-8);
}

TEST(ProductState, SpinDownTimesCoherent) {
  const CompositeSpace cs = build_composite_space(6, 3.0);
  const QuantumState s = initial_product_state(cs, 3.0);
  const SpinOperators sp = collective_spin_operators(cs.spin);
  EXPECT_NEAR(expectation(embed(sp.sz, cs, Factor::spin), s).real(), -3.0, 1e-12);
  EXPECT_NEAR(variance(embed(sp.sx, cs, Factor::spin), s), 6.0 / 4.0, 1e-12);
  // Product state: both reductions pure.
  const QuantumState rf = partial_trace_spin(s), rs = partial_trace_fock(s);
  EXPECT_NEAR(rf.density().trace().real(), 1.0, 1e-12);
  EXPECT_NEAR((rf.density() * rf.density()).trace().real(), 1.0, 1e-10);
  EXPECT_NEAR((rs.density() * rs.density()).trace().real(), 1.0, 1e-10);
}

TEST(CatState, EvenParity) {
  const FockSpace f = build_fock_space(2.0);
  const Vec cat = bosonic_cat_state(2.0, f).ket();
  double odd = 0.0;
  for (Index n = 1; n < cat.size(); n += 2) odd += std::norm(cat(n));
  EXPECT_LT(odd, 1e-20);
  EXPECT_NEAR(cat.norm(), 1.0, 1e-14);
}

TEST(AtomLightCat, EqualsExactDispersiveEvolution) {
  const int n = 8;
  const double alpha = 4.0, chi = 0.1;
  for (double t : {0.1, 0.7, 3.0}) {
    const AtomLightCat cat = atom_light_cat_state(n, alpha, chi, t);
    const QuantumState ref = evolve_dispersive_exact(initial_product_state(cat.space, alpha), chi, t);
    EXPECT_GT(fidelity(cat.state, ref), 1.0 - 1e-10) << "t=" << t;
    EXPECT_NEAR(cat.c.squaredNorm(), 1.0, 1e-12);
  }
}

TEST(AtomLightCat, ReducedCavityMatchesMixture) {
  const AtomLightCat cat = atom_light_cat_state(4, 3.0, 0.2, 1.3);
  const Mat reduced = partial_trace_spin(cat.state).density();
  const Mat mix = cat.cavity_mixture().to_state(cat.space.fock).density();
  EXPECT_LT((reduced - mix).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CoherentExpansion, RawTraceOfCat) {
  const double a = 1.3;
  Vec amp(2);
  amp << 1.0, 1.0;
  const CoherentExpansion e = CoherentExpansion::superposition({a, -a}, amp);
  // <cat|cat> unnormalized = 2 + 2 exp(-2 a^2)
  EXPECT_NEAR(e.raw_trace().real(), 2.0 + 2.0 * std::exp(-2.0 * a * a), 1e-12);
  EXPECT_THROW(CoherentExpansion::superposition({a}, amp), ValidationError);
}

TEST(StateOps, FidelityAndTraceDistance) {
  const FockSpace f = build_fock_space(2.0);
  const QuantumState a = coherent_state(1.0, f), b = coherent_state(cplx(0.0, 1.0), f);
  // |<a|b>|^2 = exp(-|a - b|^2)
  EXPECT_NEAR(fidelity(a, b), std::exp(-2.0), 1e-12);
  EXPECT_NEAR(fidelity(a.to_mixed(), b.to_mixed()), std::exp(-2.0), 1e-8);
  EXPECT_NEAR(trace_distance(a, b), std::sqrt(1.0 - std::exp(-2.0)), 1e-10);
  EXPECT_NEAR(trace_distance(a, a.to_mixed()), 0.0, 1e-12);
  EXPECT_THROW(fidelity(a, coherent_state(1.0, FockSpace{40})), ValidationError);
  EXPECT_THROW(static_cast<void>(a.density()), ValidationError);
  EXPECT_THROW(QuantumState::pure(SpaceId::of(f), Vec::Zero(3)), ValidationError);
}

class WignerCrossCheck : public ::testing::TestWithParam<int> {};

TEST_P(WignerCrossCheck, ParityAgreesWithClosedForm) {
  const double alpha = 3.0;
  const AtomLightCat cat = atom_light_cat_state(4, alpha, 0.1, 0.05 * GetParam());
  const GridSpec grid = GridSpec::around(alpha, 31);
  const WignerGrid wp = wigner_parity(cat.state, grid);
  const WignerGrid wc = wigner_closed_form(cat.cavity_mixture(), grid);
  EXPECT_LT((wp.values - wc.values).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(wp.integral(), 1.0, 0.02);
  EXPECT_NO_THROW(require_normalized(wp));
}

INSTANTIATE_TEST_SUITE_P(Times, WignerCrossCheck, ::testing::Values(1, 3, 8));

// |2 gamma|^2 far above the cutoff: the displacement elements must stay
// accurate there, and for alpha = 20 the e^{-|2 gamma|^2/2} seed underflows.
TEST(Wigner, CoherentGaussianFarFromOrigin) {
  for (const double alpha : {4.0, 20.0}) {
    const FockSpace f = build_fock_space(alpha);
    GridSpec g;
    g.x_min = alpha - 1.5;
    g.x_max = alpha + 1.5;
    g.p_min = -1.5;
    g.p_max = 1.5;
    g.nx = g.np = 7;
    const WignerGrid w = wigner_parity(coherent_state(alpha, f), g);
    for (int i = 0; i < g.nx; ++i) {
      for (int j = 0; j < g.np; ++j) {
        const double dx = g.x(i) - alpha, dp = g.p(j);
        EXPECT_NEAR(w.values(i, j), (2.0 / kPi) * std::exp(-2.0 * (dx * dx + dp * dp)), 1e-10)
            << "alpha " << alpha << " at " << g.x(i) << ", " << g.p(j);
      }
    }
  }
}

TEST(Wigner, VacuumAndCatOrigin) {
  const FockSpace f = build_fock_space(2.0);
  GridSpec g;
  g.x_min = g.x_max = g.p_min = g.p_max = 0.0;
  g.nx = g.np = 1;
  const WignerGrid vac = wigner_parity(coherent_state(0.0, f), g);
  EXPECT_NEAR(vac.values(0, 0), 2.0 / kPi, 1e-12);
  // Even cat: W(0) = (2/pi) <P> = 2/pi.
  const WignerGrid cat = wigner_parity(bosonic_cat_state(2.0, f), g);
  EXPECT_NEAR(cat.values(0, 0), 2.0 / kPi, 1e-10);
}

TEST(Wigner, CatSuperpositionClosedForm) {
  const double a0 = 2.0;
  const FockSpace f = build_fock_space(a0);
  Vec amp(2);
  amp << 1.0, 1.0;
  const CoherentExpansion e = CoherentExpansion::superposition({a0, -a0}, amp);
  const GridSpec grid = GridSpec::around(a0, 25);
  const WignerGrid wp = wigner_parity(bosonic_cat_state(a0, f), grid);
  const WignerGrid wc = wigner_closed_form(e, grid);
  EXPECT_LT((wp.values - wc.values).cwiseAbs().maxCoeff(), 1e-8);
  // Interference fringes along p: the first minimum at i pi / (4 a0).
  GridSpec fringe;
  fringe.x_min = fringe.x_max = 0.0;
  fringe.p_min = fringe.p_max = kPi / (4.0 * a0);
  fringe.nx = fringe.np = 1;
  const double p = kPi / (4.0 * a0);
  EXPECT_NEAR(wigner_parity(bosonic_cat_state(a0, f), fringe).values(0, 0),
              (2.0 / kPi) * (std::exp(-2.0 * (a0 * a0 + p * p)) - std::exp(-2.0 * p * p)) /
                  (1.0 + std::exp(-2.0 * a0 * a0)),
              1e-10);
}

TEST(Wigner, NormalizationGuard) {
  GridSpec tiny;
  tiny.x_min = tiny.p_min = 2.0;
  tiny.x_max = tiny.p_max = 3.0;
  const WignerGrid w = wigner_parity(coherent_state(0.0, FockSpace{30}), tiny);
  EXPECT_THROW(require_normalized(w), ValidationError);
}

}  // namespace
}  // namespace cavsense
