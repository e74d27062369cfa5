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

double one_norm(const SpMat& a) {
  RealVec colsum = RealVec::Zero(a.cols());
  for (Index i = 0; i < a.outerSize(); ++i) {
    for (SpMat::InnerIterator it(a, i); it; ++it) colsum(it.col()) += std::abs(it.value());
  }
  return a.cols() > 0 ? colsum.maxCoeff() : 0.0;
}

std::vector<double> normalized_samples(std::vector<double> samples, double t_end) {
  std::vector<double> out;
  for (double s : samples) {
    if (s > 0.0 && s < t_end) out.push_back(s);
  }
  out.push_back(t_end);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Lanczos basis of the Krylov space K_m(H, v), fully reorthogonalized.
struct KrylovBasis {
  Mat v;          // dim x m orthonormal columns
  RealVec diag;   // alpha_j
  RealVec off;    // beta_j, j < m-1
  double beta_next = 0.0;  // beta_m, coupling to the first excluded vector
  double start_norm = 0.0;
  Index size = 0;
};

KrylovBasis lanczos(const SpMat& h, const Vec& start, int max_dim, double h_norm) {
  const Index dim = start.size();
  const Index m = std::min<Index>(max_dim, dim);
  KrylovBasis kb;
  kb.v.resize(dim, m);
  kb.diag.resize(m);
  kb.off.resize(std::max<Index>(m - 1, 0));
  kb.start_norm = start.norm();
  if (kb.start_norm == 0.0) {
    kb.size = 0;
    return kb;
  }
  kb.v.col(0) = start / kb.start_norm;
  const double breakdown = 1e-13 * std::max(h_norm, 1e-300);
  for (Index j = 0; j < m; ++j) {
    Vec w = h * kb.v.col(j);
    kb.diag(j) = kb.v.col(j).dot(w).real();
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const Vec proj = kb.v.leftCols(j + 1).adjoint() * w;
      w.noalias() -= kb.v.leftCols(j + 1) * proj;
    }
    const double beta = w.norm();
    kb.size = j + 1;
    if (beta <= breakdown) {
      kb.beta_next = 0.0;
      return kb;
    }
    if (j + 1 < m) {
      kb.off(j) = beta;
      kb.v.col(j + 1) = w / beta;
    } else {
      kb.beta_next = beta;
    }
  }
  return kb;
}

// exp(-i dt T) e_1 for the tridiagonal Lanczos matrix, via its eigensystem.
struct TridiagExp {
  RealVec theta;
  RealMat s;

  explicit TridiagExp(const KrylovBasis& kb) {
    const Index m = kb.size;
    RealMat t = RealMat::Zero(m, m);
    for (Index j = 0; j < m; ++j) {
      t(j, j) = kb.diag(j);
      if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = kb.off(j);
    }
    Eigen::SelfAdjointEigenSolver<RealMat> eig(t);
    theta = eig.eigenvalues();
    s = eig.eigenvectors();
  }

  Vec apply(double dt) const {
    const Vec phase = (theta.cast<cplx>() * cplx(0.0, -dt)).array().exp().matrix();
    const Vec first_row = s.row(0).transpose().cast<cplx>();
    return s.cast<cplx>() * phase.cwiseProduct(first_row);
  }
};

}  // namespace

EvolutionResult evolve_unitary(const OperatorMatrix& h, const QuantumState& psi, double t,
                               const UnitaryOptions& opts) {
  if (!psi.is_pure()) throw ValidationError("evolve_unitary needs a pure state");
  if (!(h.space == psi.space())) {
    throw ValidationError("evolve_unitary: Hamiltonian on " + h.space.describe() + ", state on " +
                          psi.space().describe());
  }
  const double h_norm = one_norm(h.entries);
  if (h.hermiticity_defect() > 1e-10 * std::max(1.0, h_norm)) {
    throw ValidationError("evolve_unitary: Hamiltonian is not Hermitian");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("evolve_unitary: t must be finite and >= 0");
  if (!(opts.tol > 0.0)) throw ValidationError("evolve_unitary: tol must be > 0");

  const std::vector<double> samples = normalized_samples(opts.sample_times, t);
  EvolutionResult result{psi, {}, {}, {}, 0.0};
  const double norm0 = psi.ket().squaredNorm();

  Vec v = psi.ket();
  auto record = [&](double time) {
    const QuantumState cur = QuantumState::pure(psi.space(), v);
    result.times.push_back(time);
    for (const auto& obs : opts.observables) result.traces[obs.name].push_back(expectation(obs.op, cur));
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(v.squaredNorm() - norm0));
  };

  const int m = std::max(2, opts.krylov_dim);
  double now = 0.0;
  double dt = h_norm > 0.0 ? std::min(t, 0.25 * m / h_norm) : t;
  size_t next_sample = 0;
  if (t == 0.0) {
    record(0.0);
    result.final_state = QuantumState::pure(psi.space(), v);
    return result;
  }

  while (next_sample < samples.size()) {
    const double target = samples[next_sample];
    if (result.stats.steps >= opts.max_steps) {
      throw IntegrationError("evolve_unitary: step budget exhausted before reaching t=" +
                             std::to_string(target));
    }
    const KrylovBasis kb = lanczos(h.entries, v, m, h_norm);
    if (kb.size == 0 || kb.beta_next == 0.0) {
      // Zero vector or invariant Krylov space: exact in one step.
      if (kb.size > 0) {
        const TridiagExp ex(kb);
        v = kb.start_norm * (kb.v.leftCols(kb.size) * ex.apply(target - now));
      }
      now = target;
      ++result.stats.steps;
      record(now);
      ++next_sample;
      continue;
    }
    const TridiagExp ex(kb);
    dt = std::min(dt, target - now);
    for (;;) {
      const Vec y = ex.apply(dt);
      const double err = kb.start_norm * kb.beta_next * std::abs(y(kb.size - 1));
      const double allowed = opts.tol * dt / t;
      if (err <= allowed || dt <= 1e-15 * t) {
        v = kb.start_norm * (kb.v.leftCols(kb.size) * y);
        now += dt;
        ++result.stats.steps;
        result.stats.final_error_estimate += err;
        const double grow = err > 0.0 ? 0.9 * std::pow(allowed / err, 1.0 / kb.size) : 5.0;
        dt *= std::clamp(grow, 0.2, 5.0);
        break;
      }
      ++result.stats.rejected_steps;
      dt *= std::clamp(0.9 * std::pow(allowed / err, 1.0 / kb.size), 0.1, 0.9);
    }
    if (now >= target * (1.0 - 1e-15)) {
      now = target;
      record(now);
      ++next_sample;
    }
  }
  result.final_state = QuantumState::pure(psi.space(), std::move(v));
  if (result.max_norm_drift > 1e-8) {
    throw IntegrationError("evolve_unitary: norm drift " + std::to_string(result.max_norm_drift) +
                           " exceeds 1e-8");
  }
  return result;
}

}  // namespace cavsense
