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
#include <map>
#include <memory>

#include "cavsense/dynamics.hpp"

namespace cavsense {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// y = A x for CSR A and column-major dense x; complex products spelled out so
// the inner loop stays branch-free.
void csr_times_dense(const SpMat& a, const Mat& x, Mat& y) {
  const auto* outer = a.outerIndexPtr();
  const auto* inner = a.innerIndexPtr();
  const cplx* val = a.valuePtr();
  const Index rows = a.rows(), cols = x.cols(), ld = x.rows();
  for (Index c = 0; c < cols; ++c) {
    const cplx* xc = x.data() + c * ld;
    cplx* yc = y.data() + c * y.rows();
    for (Index i = 0; i < rows; ++i) {
      double re = 0.0, im = 0.0;
      for (auto p = outer[i]; p < outer[i + 1]; ++p) {
        const double ar = val[p].real(), ai = val[p].imag();
        const double xr = xc[inner[p]].real(), xi = xc[inner[p]].imag();
        re += ar * xr - ai * xi;
        im += ar * xi + ai * xr;
      }
      yc[i] = cplx(re, im);
    }
  }
}

// y += s * T A^dag for CSR A: column j of the product is sum_p conj(A_jp) T.col(p).
void add_times_csr_adjoint(const Mat& t, const SpMat& a, double s, Mat& y) {
  const auto* outer = a.outerIndexPtr();
  const auto* inner = a.innerIndexPtr();
  const cplx* val = a.valuePtr();
  for (Index j = 0; j < a.rows(); ++j) {
    for (auto p = outer[j]; p < outer[j + 1]; ++p) {
      y.col(j).noalias() += (s * std::conj(val[p])) * t.col(inner[p]);
    }
  }
}

// Sparse operator in diagonal storage when it has few distinct diagonals
// (the usual case for spin (x) fock operators), CSR otherwise.
class BandedOperator {
 public:
  explicit BandedOperator(const SpMat& a) : csr_(a) {
    csr_.makeCompressed();
    std::map<Index, Vec> diags;
    for (Index i = 0; i < a.outerSize(); ++i) {
      for (SpMat::InnerIterator it(a, i); it; ++it) {
        const Index off = it.col() - it.row();
        auto [pos, inserted] = diags.try_emplace(off);
        if (inserted) pos->second = Vec::Zero(a.rows());
        pos->second(it.row()) = it.value();
      }
    }
    if (diags.size() <= kMaxDiagonals) {
      for (auto& [off, v] : diags) bands_.push_back({off, std::move(v)});
      banded_ = true;
    }
  }

  // y = A x
  void times(const Mat& x, Mat& y) const {
    if (!banded_) {
      csr_times_dense(csr_, x, y);
      return;
    }
    const Index n = x.rows();
    y.setZero();
    for (const auto& [off, v] : bands_) {
      const Index r0 = std::max<Index>(0, -off), len = n - std::abs(off);
      y.middleRows(r0, len).noalias() += v.segment(r0, len).asDiagonal() * x.middleRows(r0 + off, len);
    }
  }

  // y += s T A^dag
  void add_times_adjoint(const Mat& t, double s, Mat& y) const {
    if (!banded_) {
      add_times_csr_adjoint(t, csr_, s, y);
      return;
    }
    const Index n = t.cols();
    for (const auto& [off, v] : bands_) {
      const Index r0 = std::max<Index>(0, -off), len = n - std::abs(off);
      for (Index j = r0; j < r0 + len; ++j) {
        if (v(j) != cplx(0.0)) y.col(j).noalias() += (s * std::conj(v(j))) * t.col(j + off);
      }
    }
  }

 private:
  static constexpr size_t kMaxDiagonals = 32;
  struct Band {
    Index offset;
    Vec values;
  };
  SpMat csr_;
  std::vector<Band> bands_;
  bool banded_ = false;
};

// Hermitian-preserving Liouvillian: K rho + (K rho)^dag + sum gamma L rho L^dag,
// with K = -iH - (1/2) sum gamma L^dag L.
//
// When H is diagonal in the working basis the coherent part is integrated
// exactly: the integrator then carries rho_I = U^dag rho U with U = exp(-iHt),
// and only the dissipator (rotated by U) is left for the explicit pair.
class Liouvillian {
 public:
  Liouvillian(const OperatorMatrix& h, const std::vector<JumpOperator>& jumps) {
    interaction_ = is_diagonal(h.entries);
    SpMat k(h.entries.rows(), h.entries.cols());
    if (interaction_) {
      energies_ = h.entries.diagonal().real();
    } else {
      k = cplx(0.0, -1.0) * h.entries;
      scale_ += norm1(h.entries);
    }
    for (const auto& j : jumps) {
      if (j.rate == 0.0) continue;
      SpMat ldl = j.op.entries.adjoint() * j.op.entries;
      k -= cplx(0.5 * j.rate) * ldl;
      jumps_.emplace_back(j.rate, BandedOperator(j.op.entries));
      scale_ += j.rate * norm1(ldl);
    }
    k.prune(cplx(0.0), 0.0);
    k_ = std::make_unique<BandedOperator>(k);
  }

  bool interaction_picture() const { return interaction_; }

  // Lab-frame state from the integrator variable at time t.
  Mat to_lab(double t, const Mat& y) const {
    if (!interaction_) return y;
    const Vec p = phases(t);
    return p.asDiagonal() * y * p.conjugate().asDiagonal();
  }

  void apply(double t, const Mat& rho, Mat& out) const {
    if (tmp_.rows() != rho.rows()) tmp_.resize(rho.rows(), rho.cols());
    if (!interaction_) {
      dissipate(rho, out);
      return;
    }
    if (jumps_.empty()) {
      out.setZero(rho.rows(), rho.cols());
      return;
    }
    const Vec p = phases(t);
    lab_.noalias() = p.asDiagonal() * rho * p.conjugate().asDiagonal();
    dissipate(lab_, out);
    out = p.conjugate().asDiagonal() * out * p.asDiagonal();
  }

  double scale() const { return scale_; }

 private:
  static double norm1(const SpMat& a) {
    RealVec colsum = RealVec::Zero(a.cols());
    for (Index i = 0; i < a.outerSize(); ++i) {
      for (SpMat::InnerIterator it(a, i); it; ++it) colsum(it.col()) += std::abs(it.value());
    }
    return a.cols() > 0 ? colsum.maxCoeff() : 0.0;
  }

  static bool is_diagonal(const SpMat& a) {
    for (Index i = 0; i < a.outerSize(); ++i) {
      for (SpMat::InnerIterator it(a, i); it; ++it) {
        if (it.row() != it.col() && it.value() != cplx(0.0)) return false;
      }
    }
    return true;
  }

  Vec phases(double t) const {
    Vec p(energies_.size());
    for (Index i = 0; i < p.size(); ++i) p(i) = std::polar(1.0, -energies_(i) * t);
    return p;
  }

  void dissipate(const Mat& rho, Mat& out) const {
    k_->times(rho, tmp_);
    out = tmp_ + tmp_.adjoint();
    for (const auto& [rate, l] : jumps_) {
      l.times(rho, tmp_);
      l.add_times_adjoint(tmp_, rate, out);
    }
  }

  bool interaction_ = false;
  RealVec energies_;
  std::unique_ptr<BandedOperator> k_;
  std::vector<std::pair<double, BandedOperator>> jumps_;
  double scale_ = 0.0;
  mutable Mat tmp_, lab_;
};

double scaled_rms(const Mat& err, const Mat& y0, const Mat& y1, double atol, double rtol) {
  double acc = 0.0;
  const Index n = err.size();
  for (Index i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0.data()[i]), std::abs(y1.data()[i]));
    acc += std::norm(err.data()[i]) / (sc * sc);
  }
  return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

OperatorMatrix cavity_annihilation(const SpaceId& space) {
  switch (space.kind) {
    case SpaceId::Kind::fock:
      return boson_operators(space.fock()).a;
    case SpaceId::Kind::composite: {
      const CompositeSpace cs = space.composite();
      return embed(boson_operators(cs.fock).a, cs, Factor::fock);
    }
    case SpaceId::Kind::spin:
      break;
  }
  throw ValidationError("cavity_annihilation: space has no cavity mode");
}

EvolutionResult evolve_lindblad(const QuantumState& rho0, const OperatorMatrix& h, double kappa,
                                double t, const LindbladOptions& opts) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa must be finite and >= 0");
  std::vector<JumpOperator> jumps;
  if (kappa > 0.0) jumps.push_back({kappa, cavity_annihilation(rho0.space())});
  return evolve_lindblad(rho0, h, jumps, t, opts);
}

EvolutionResult evolve_lindblad(const QuantumState& rho0, const OperatorMatrix& h,
                                const std::vector<JumpOperator>& jumps, double t,
                                const LindbladOptions& opts) {
  if (!(h.space == rho0.space())) {
    throw ValidationError("evolve_lindblad: Hamiltonian on " + h.space.describe() + ", state on " +
                          rho0.space().describe());
  }
  for (const auto& j : jumps) {
    if (!(j.op.space == rho0.space())) throw ValidationError("evolve_lindblad: jump operator space mismatch");
    if (!(j.rate >= 0.0)) throw ValidationError("evolve_lindblad: jump rates must be >= 0");
  }
  if (h.hermiticity_defect() > 1e-10) throw ValidationError("evolve_lindblad: Hamiltonian is not Hermitian");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("evolve_lindblad: t must be finite and >= 0");
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw ValidationError("evolve_lindblad: tolerances must be > 0");

  const Liouvillian lv(h, jumps);
  const SpaceId space = rho0.space();
  Mat y = rho0.density_matrix();
  const double trace0 = y.trace().real();

  std::vector<double> samples;
  for (double s : opts.sample_times) {
    if (s > 0.0 && s < t) samples.push_back(s);
  }
  samples.push_back(t);
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

  EvolutionResult result{rho0.to_mixed(), {}, {}, {}, 0.0};
  auto record = [&](double time) {
    const QuantumState cur = QuantumState::mixed(space, lv.to_lab(time, y));
    result.times.push_back(time);
    for (const auto& obs : opts.observables) result.traces[obs.name].push_back(expectation(obs.op, cur));
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(y.trace().real() - trace0));
  };

  if (t == 0.0) {
    record(0.0);
    result.final_state = QuantumState::mixed(space, y);
    return result;
  }

  const Index n = y.rows();
  Mat k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n);
  Mat stage(n, n), y_new(n, n), err(n, n);
  lv.apply(0.0, y, k1);

  double dt = opts.initial_step > 0.0
                  ? opts.initial_step
                  : (lv.scale() > 0.0 ? std::min(t, 0.5 * std::pow(opts.rtol, 0.2) / lv.scale()) : t);
  double now = 0.0;
  double fac_old = 1e-4;
  bool last_rejected = false;
  int stiff_hits = 0, non_stiff = 0;
  size_t next_sample = 0;

  // PI controller constants.
  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;

  while (next_sample < samples.size()) {
    const double target = samples[next_sample];
    if (result.stats.steps + result.stats.rejected_steps >= opts.max_steps) {
      throw IntegrationError("evolve_lindblad: step budget exhausted at t=" + std::to_string(now));
    }
    const bool clipped = dt >= target - now;
    const double h_step = clipped ? target - now : dt;
    if (h_step < opts.min_step && !clipped) {
      throw IntegrationError("evolve_lindblad: step size underflow at t=" + std::to_string(now));
    }

    stage = y + h_step * a21 * k1;
    lv.apply(now + c2 * h_step, stage, k2);
    stage = y + h_step * (a31 * k1 + a32 * k2);
    lv.apply(now + c3 * h_step, stage, k3);
    stage = y + h_step * (a41 * k1 + a42 * k2 + a43 * k3);
    lv.apply(now + c4 * h_step, stage, k4);
    stage = y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    lv.apply(now + c5 * h_step, stage, k5);
    stage = y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    lv.apply(now + h_step, stage, k6);
    y_new = y + h_step * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    lv.apply(now + h_step, y_new, k7);
    err = h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double err_norm = scaled_rms(err, y, y_new, opts.atol, opts.rtol);
    const double fac11 = std::pow(std::max(err_norm, 1e-300), expo1);
    if (err_norm <= 1.0) {
      // Stiffness test on the last two stages (stage 6 argument is still in `stage`).
      const double den = (y_new - stage).squaredNorm();
      if (den > 0.0) {
        const double h_lambda = h_step * std::sqrt((k7 - k6).squaredNorm() / den);
        if (h_lambda > 3.25) {
          non_stiff = 0;
          if (++stiff_hits >= 15) {
            throw IntegrationError("evolve_lindblad: problem appears stiff at t=" + std::to_string(now) +
                                   "; explicit integration is not adequate");
          }
        } else if (++non_stiff >= 6) {
          stiff_hits = 0;
        }
      }
      double fac = fac11 / std::pow(fac_old, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double dt_new = h_step / fac;
      if (last_rejected) dt_new = std::min(dt_new, h_step);
      fac_old = std::max(err_norm, 1e-4);
      last_rejected = false;

      y = 0.5 * (y_new + y_new.adjoint());
      k1.swap(k7);
      now = clipped ? target : now + h_step;
      ++result.stats.steps;
      result.stats.final_error_estimate = err_norm;
      // Keep the controller's step when a sample clipped it.
      dt = clipped ? std::max(dt, dt_new) : dt_new;
      if (clipped) {
        record(now);
        ++next_sample;
      }
    } else {
      ++result.stats.rejected_steps;
      last_rejected = true;
      dt = h_step / std::min(facc1, fac11 / safe);
    }
  }

  y = lv.to_lab(now, y);
  result.final_state = QuantumState::mixed(space, y);
  if (result.max_norm_drift > 1e-7 * std::max(1.0, std::abs(trace0))) {
    throw IntegrationError("evolve_lindblad: trace drift " + std::to_string(result.max_norm_drift) +
                           " exceeds 1e-7");
  }
  if (n <= opts.positivity_check_max_dim) {
    // rho + 1e-6 I admits a Cholesky factor iff its smallest eigenvalue exceeds -1e-6.
    const Mat shifted = y + 1e-6 * Mat::Identity(n, n);
    Eigen::LLT<Mat> llt(shifted);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Mat> eig(y, Eigen::EigenvaluesOnly);
      throw IntegrationError("evolve_lindblad: state lost positivity (min eigenvalue " +
                             std::to_string(eig.eigenvalues().minCoeff()) + ")");
    }
  }
  return result;
}

}  // namespace cavsense
