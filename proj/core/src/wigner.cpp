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

#include "cavsense/states.hpp"

namespace cavsense {

namespace {

// Matrix elements <m|D(beta)|n>, 0 <= m, n < dim.
//
// Along each diagonal m = k + a the element is a normalized associated
// Laguerre function,
//   <k+a|D|k> = sqrt(k!/(k+a)!) e^{-x/2} beta^a L_k^a(x),  x = |beta|^2,
// and <k|D|k+a> carries (-beta^*)^a instead. The three-term recurrence in k
// is stable in both regimes. The obvious column recursion from
// D a^dagger = (a^dagger - beta^*) D is not: once x exceeds dim it loses
// every digit to cancellation.
void displacement_elements(cplx beta, Index dim, Mat& out) {
  out.resize(dim, dim);
  const double x = std::norm(beta);
  if (x == 0.0) {
    out.setIdentity();
    return;
  }
  const double log_x = std::log(x);
  const cplx unit = beta / std::sqrt(x);
  const cplx unit_back = -std::conj(unit);
  for (Index a = 0; a < dim; ++a) {
    const double da = static_cast<double>(a);
    const cplx down = std::pow(unit, da), up = std::pow(unit_back, da);
    // g = value * exp(log_scale); rescaled as it runs so the seed e^{-x/2}
    // cannot underflow the whole diagonal.
    double log_scale = -0.5 * x + 0.5 * da * log_x - 0.5 * std::lgamma(da + 1.0);
    double g = 1.0, g_prev = 0.0;
    for (Index k = 0; k + a < dim; ++k) {
      const double value = g * std::exp(log_scale);
      out(k + a, k) = value * down;
      if (a > 0) out(k, k + a) = value * up;
      const double dk = static_cast<double>(k);
      const double next =
          ((2.0 * dk + 1.0 + da - x) * g - std::sqrt(dk * (dk + da)) * g_prev) /
          std::sqrt((dk + 1.0) * (dk + 1.0 + da));
      g_prev = g;
      g = next;
      const double mag = std::abs(g);
      if (mag > 1e100 || (mag < 1e-100 && mag > 0.0)) {
        log_scale += std::log(mag);
        g /= mag;
        g_prev /= mag;
      }
    }
  }
}

}  // namespace

GridSpec GridSpec::around(double alpha_mag, int resolution) {
  const double half = 2.0 * alpha_mag + 6.0;
  return {-half, half, -half, half, resolution, resolution};
}

double GridSpec::x(int i) const {
  return nx == 1 ? x_min : x_min + (x_max - x_min) * i / (nx - 1);
}

double GridSpec::p(int j) const {
  return np == 1 ? p_min : p_min + (p_max - p_min) * j / (np - 1);
}

double GridSpec::cell_area() const {
  const double dx = nx > 1 ? (x_max - x_min) / (nx - 1) : 1.0;
  const double dp = np > 1 ? (p_max - p_min) / (np - 1) : 1.0;
  return dx * dp;
}

double WignerGrid::integral() const { return values.sum() * grid.cell_area(); }

WignerGrid wigner_parity(const QuantumState& state, const GridSpec& grid) {
  if (grid.nx < 1 || grid.np < 1) throw ValidationError("wigner: grid resolution must be >= 1");
  QuantumState fock_state = state;
  if (state.space().kind == SpaceId::Kind::composite) fock_state = partial_trace_spin(state);
  if (fock_state.space().kind != SpaceId::Kind::fock) {
    throw ValidationError("wigner: state must live on a Fock or spin (x) fock space");
  }
  const Mat rho = fock_state.density_matrix();
  const Index dim = rho.rows();

  // W(gamma) = (2/pi) tr[rho D(2 gamma) P]  since  D(g) P D(g)^dagger = D(2g) P.
  // Fold the parity signs into rho once: (P rho)^T_{mn} = (-1)^n rho_{nm}.
  Mat signed_rho_t = rho.transpose();
  for (Index n = 1; n < dim; n += 2) signed_rho_t.col(n) *= -1.0;

  WignerGrid out{grid, RealMat(grid.nx, grid.np)};
  Mat disp;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.np; ++j) {
      displacement_elements(2.0 * cplx(grid.x(i), grid.p(j)), dim, disp);
      out.values(i, j) = (2.0 / kPi) * (disp.cwiseProduct(signed_rho_t)).sum().real();
    }
  }
  return out;
}

WignerGrid wigner_closed_form(const CoherentExpansion& expansion, const GridSpec& grid) {
  if (grid.nx < 1 || grid.np < 1) throw ValidationError("wigner: grid resolution must be >= 1");
  const Index k = static_cast<Index>(expansion.alphas.size());
  const cplx norm = expansion.raw_trace();
  if (std::abs(norm) == 0.0) throw ValidationError("wigner: expansion has zero trace");

  // W_{|a><b|}(g) = (2/pi) <b|a> exp(-2 (g^* - b^*)(g - a)).
  WignerGrid out{grid, RealMat::Zero(grid.nx, grid.np)};
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.np; ++j) {
      const cplx g(grid.x(i), grid.p(j));
      cplx acc = 0.0;
      for (Index a = 0; a < k; ++a) {
        for (Index b = 0; b < k; ++b) {
          const cplx coeff = expansion.coefficients(a, b);
          if (coeff == 0.0) continue;
          const cplx al = expansion.alphas[a], be = expansion.alphas[b];
          const cplx log_overlap = -0.5 * std::norm(al) - 0.5 * std::norm(be) + std::conj(be) * al;
          acc += coeff * std::exp(log_overlap - 2.0 * (std::conj(g) - std::conj(be)) * (g - al));
        }
      }
      out.values(i, j) = (2.0 / kPi) * (acc / norm).real();
    }
  }
  return out;
}

void require_normalized(const WignerGrid& w, double tol) {
  const double integral = w.integral();
  if (!(std::abs(integral - 1.0) <= tol)) {
    throw ValidationError("wigner grid too small to contain the state: integral " +
                          std::to_string(integral));
  }
}

}  // namespace cavsense
