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

#include "cavsense/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/tools/minima.hpp>

namespace cavsense {

namespace {

HamiltonianSpec protocol_hamiltonian(const ProtocolConfig& cfg) {
  const double chi = cfg.effective_chi();
  if (cfg.include_rabi_term) return HamiltonianSpec::resonant_effective(chi * cfg.alpha, cfg.alpha, true);
  return HamiltonianSpec::dispersive(chi);
}

struct SpinObservables {
  OperatorMatrix sx, sy, sz;
};

SpinObservables composite_spin(const CompositeSpace& cs) {
  const SpinOperators s = collective_spin_operators(cs.spin);
  return {embed(s.sx, cs, Factor::spin), embed(s.sy, cs, Factor::spin), embed(s.sz, cs, Factor::spin)};
}

ProtocolResult measure(const QuantumState& final_state, const QuantumState& initial,
                       const SpinObservables& ops) {
  const double norm = final_state.norm_or_trace();
  return {expectation(ops.sx, final_state).real() / norm,
          expectation(ops.sy, final_state).real() / norm,
          expectation(ops.sz, final_state).real() / norm,
          variance(ops.sy, final_state) / norm,
          fidelity(initial, final_state),
          final_state};
}

// Rethrows the active exception with `prefix` prepended, keeping the library error category.
[[noreturn]] void rethrow_with_context(const std::exception_ptr& ep, const std::string& prefix) {
  try {
    std::rethrow_exception(ep);
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const CutoffError& e) {
    throw CutoffError(prefix + e.what());
  } catch (const SpaceTooLarge& e) {
    throw SpaceTooLarge(prefix + e.what());
  } catch (const IntegrationError& e) {
    throw IntegrationError(prefix + e.what());
  } catch (const InsensitiveObservable& e) {
    throw InsensitiveObservable(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

// (e^{x} - 1) / x, stable near 0.
cplx expm1_ratio(cplx x) {
  if (std::abs(x) < 1e-6) return 1.0 + x / 2.0 + x * x / 6.0;
  return (std::exp(x) - 1.0) / x;
}

// Bargmann vector e^{u a^dag}|0> truncated to the Fock space.
Vec bargmann(cplx u, const FockSpace& fock) {
  Vec v(fock.dim());
  v(0) = 1.0;
  for (Index n = 1; n < fock.dim(); ++n) v(n) = v(n - 1) * u / std::sqrt(static_cast<double>(n));
  return v;
}

}  // namespace

double ProtocolConfig::effective_chi() const {
  if (g) return *g / alpha;
  return chi;
}

void ProtocolConfig::validate() const {
  if (n_atoms < 1) throw ValidationError("n_atoms must be >= 1");
  if (!std::isfinite(alpha) || alpha < 0.0) throw ValidationError("alpha must be finite and >= 0");
  if (g) {
    if (!std::isfinite(*g)) throw ValidationError("g must be finite");
    if (!(alpha > 0.0)) throw ValidationError("coupling given as g requires alpha > 0");
  } else if (!std::isfinite(chi)) {
    throw ValidationError("chi must be finite");
  }
  if (!std::isfinite(kappa) || kappa < 0.0) throw ValidationError("kappa must be finite and >= 0");
  if (gamma != 0.0) throw ValidationError("gamma: spontaneous emission not supported in this version");
  if (!std::isfinite(tau) || !(tau > 0.0)) throw ValidationError("tau must be finite and > 0");
  if (backend == Backend::unitary && kappa != 0.0) {
    throw ValidationError("kappa > 0 requires the lindblad backend");
  }
  if (include_rabi_term && !(alpha > 0.0)) throw ValidationError("include_rabi_term requires alpha > 0");
  if (!(unitary_tol > 0.0) || !(lindblad_rtol > 0.0) || !(lindblad_atol > 0.0)) {
    throw ValidationError("tolerances must be > 0");
  }
  if (!(margin_sigmas >= 6.0)) throw ValidationError("margin_sigmas must be >= 6");
}

namespace {

// Steps (1)-(2), shared by every displacement of a scan. Dynamics run in the
// S_x (x) fock product basis, where both dispersive Hamiltonians are diagonal;
// `to_frame` maps S_z-basis vectors there.
struct ForwardStage {
  CompositeSpace space;
  SpMat to_frame;
  OperatorMatrix h, h_reversed, rotation;
  SpinObservables ops;
  QuantumState initial;
  QuantumState entangled;
};

OperatorMatrix in_frame(const OperatorMatrix& op, const SpMat& w) {
  OperatorMatrix out = op;
  out.entries = w.adjoint() * op.entries * w;
  double scale = 0.0;
  for (Index i = 0; i < out.entries.outerSize(); ++i) {
    for (SpMat::InnerIterator it(out.entries, i); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  out.entries.prune(cplx(scale), 1e-13);
  return out;
}

QuantumState state_in_frame(const QuantumState& s, const SpMat& w) {
  if (s.is_pure()) return QuantumState::pure(s.space(), w.adjoint() * s.ket());
  return QuantumState::mixed(s.space(), w.adjoint() * s.density() * w);
}

QuantumState state_from_frame(const QuantumState& s, const SpMat& w) {
  if (s.is_pure()) return QuantumState::pure(s.space(), w * s.ket());
  Mat rho = w * s.density() * w.adjoint();
  return QuantumState::mixed(s.space(), std::move(rho));
}

QuantumState evolve_for_tau(const ProtocolConfig& cfg, const OperatorMatrix& ham, const QuantumState& s) {
  if (cfg.backend == Backend::unitary) {
    UnitaryOptions o;
    o.tol = cfg.unitary_tol;
    return evolve_unitary(ham, s, cfg.tau, o).final_state;
  }
  LindbladOptions o;
  o.rtol = cfg.lindblad_rtol;
  o.atol = cfg.lindblad_atol;
  return evolve_lindblad(s, ham, cfg.kappa, cfg.tau, o).final_state;
}

// `max_beta` sizes the cutoff for the largest displacement that will follow.
ForwardStage run_forward(const ProtocolConfig& cfg, double max_beta) {
  cfg.validate();
  const CompositeSpace cs = build_composite_space(cfg.n_atoms, cfg.alpha + max_beta, cfg.margin_sigmas);
  const SxEigenbasis sxb = sx_eigenbasis(cs.spin);
  OperatorMatrix v{SpaceId::of(cs.spin), sxb.vectors.cast<cplx>().sparseView(), false};
  const SpMat w = embed(v, cs, Factor::spin).entries;

  const HamiltonianSpec spec = protocol_hamiltonian(cfg);
  const SpinObservables z_ops = composite_spin(cs);
  SpinObservables ops{in_frame(z_ops.sx, w), in_frame(z_ops.sy, w), in_frame(z_ops.sz, w)};
  OperatorMatrix h = in_frame(build_hamiltonian(spec, cs), w);
  OperatorMatrix h_rev = in_frame(build_hamiltonian(sign_reversed_hamiltonian(spec), cs), w);
  OperatorMatrix r = in_frame(embed(rotation_operator(cs.spin, Axis::z, kPi), cs, Factor::spin), w);

  QuantumState psi0 = state_in_frame(initial_product_state(cs, cfg.alpha), w);
  // (1) prepare, (2) entangle
  QuantumState state = cfg.backend == Backend::lindblad ? psi0.to_mixed() : psi0;
  state = evolve_for_tau(cfg, h, state);
  return {cs,           w, std::move(h), std::move(h_rev), std::move(r), std::move(ops), std::move(psi0),
          std::move(state)};
}

// Steps (3)-(5).
ProtocolResult run_reverse(const ProtocolConfig& cfg, const ForwardStage& fwd, const DisplacementSpec& d) {
  // (3) displace; acts on the fock factor only, so the spin frame is irrelevant.
  QuantumState state = apply_displacement(fwd.entangled, d);
  // (4) reverse
  if (cfg.reversal == Reversal::negate_hamiltonian) {
    state = evolve_for_tau(cfg, fwd.h_reversed, state);
  } else {
    // R H R^dag = -H for R = exp(-i pi S_z), so exp(iH tau) = R exp(-iH tau) R^dag.
    const SpMat& r = fwd.rotation.entries;
    const SpMat r_adj = r.adjoint();
    if (state.is_pure()) {
      state = QuantumState::pure(state.space(), r_adj * state.ket());
    } else {
      state = QuantumState::mixed(state.space(), r_adj * state.density() * r);
    }
    state = evolve_for_tau(cfg, fwd.h, state);
    if (state.is_pure()) {
      state = QuantumState::pure(state.space(), r * state.ket());
    } else {
      state = QuantumState::mixed(state.space(), r * state.density() * r_adj);
    }
  }
  // (5) measure
  ProtocolResult res = measure(state, fwd.initial, fwd.ops);
  res.final_state = state_from_frame(res.final_state, fwd.to_frame);
  return res;
}

}  // namespace

ProtocolResult run_protocol(const ProtocolConfig& cfg) {
  const ForwardStage fwd = run_forward(cfg, cfg.displacement.magnitude());
  return run_reverse(cfg, fwd, cfg.displacement);
}

ProtocolResult run_protocol_closed_form(const ProtocolConfig& cfg) {
  cfg.validate();
  if (cfg.include_rabi_term) {
    throw ValidationError("closed-form protocol covers the bare dispersive Hamiltonian only");
  }
  const CompositeSpace cs =
      build_composite_space(cfg.n_atoms, cfg.alpha + cfg.displacement.magnitude(), cfg.margin_sigmas);
  const SxEigenbasis sxb = sx_eigenbasis(cs.spin);
  const Index ds = cs.spin.dim(), df = cs.fock.dim();
  const double chi = cfg.effective_chi();
  const double kappa = cfg.kappa;
  const cplx beta = cfg.displacement.value();
  const RealVec c = sxb.vectors.row(0).transpose();

  // Block (j, l) of rho in the S_x basis is F ||u))((v||, u and v unnormalized coherent labels.
  Mat f(ds, ds), u(ds, ds), v(ds, ds);
  for (Index j = 0; j < ds; ++j) {
    for (Index l = 0; l < ds; ++l) {
      f(j, l) = c(j) * c(l) * std::exp(-cfg.alpha * cfg.alpha);
      u(j, l) = cfg.alpha;
      v(j, l) = cfg.alpha;
    }
  }
  auto evolve = [&](double sign) {
    for (Index j = 0; j < ds; ++j) {
      for (Index l = 0; l < ds; ++l) {
        const cplx lu(-0.5 * kappa, -sign * chi * sxb.m(j));
        const cplx lv(-0.5 * kappa, -sign * chi * sxb.m(l));
        const cplx rate = lu + std::conj(lv);
        const cplx integral = u(j, l) * std::conj(v(j, l)) * cfg.tau * expm1_ratio(rate * cfg.tau);
        f(j, l) *= std::exp(kappa * integral);
        u(j, l) *= std::exp(lu * cfg.tau);
        v(j, l) *= std::exp(lv * cfg.tau);
      }
    }
  };
  evolve(1.0);
  const double b2 = std::norm(beta);
  for (Index j = 0; j < ds; ++j) {
    for (Index l = 0; l < ds; ++l) {
      f(j, l) *= std::exp(-u(j, l) * std::conj(beta) - std::conj(v(j, l)) * beta - b2);
      u(j, l) += beta;
      v(j, l) += beta;
    }
  }
  evolve(-1.0);

  // Full state in the S_x basis, then rotated to the S_z basis.
  Mat rho_x(cs.dim(), cs.dim());
  for (Index j = 0; j < ds; ++j) {
    for (Index l = 0; l < ds; ++l) {
      rho_x.block(j * df, l * df, df, df) =
          f(j, l) * bargmann(u(j, l), cs.fock) * bargmann(v(j, l), cs.fock).adjoint();
    }
  }
  const Mat vk = sxb.vectors.cast<cplx>();
  Mat tmp = Mat::Zero(cs.dim(), cs.dim());
  for (Index k = 0; k < ds; ++k) {
    for (Index l = 0; l < ds; ++l) {
      for (Index j = 0; j < ds; ++j) tmp.block(k * df, l * df, df, df) += vk(k, j) * rho_x.block(j * df, l * df, df, df);
    }
  }
  Mat rho_z = Mat::Zero(cs.dim(), cs.dim());
  for (Index k = 0; k < ds; ++k) {
    for (Index l = 0; l < ds; ++l) {
      for (Index j = 0; j < ds; ++j) rho_z.block(k * df, l * df, df, df) += tmp.block(k * df, j * df, df, df) * vk(l, j);
    }
  }
  rho_z = 0.5 * (rho_z + rho_z.adjoint());
  rho_z /= rho_z.trace().real();

  const QuantumState psi0 = initial_product_state(cs, cfg.alpha);
  return measure(QuantumState::mixed(SpaceId::of(cs), std::move(rho_z)), psi0, composite_spin(cs));
}

std::vector<double> default_beta_values(const ProtocolConfig& cfg) {
  const double chi = std::abs(cfg.effective_chi());
  double beta_max = 0.02 / (chi * cfg.alpha * cfg.tau * std::sqrt(static_cast<double>(cfg.n_atoms)) + 1.0);
  beta_max = std::clamp(beta_max, 1e-4, 0.05);
  return {-beta_max, -0.5 * beta_max, 0.0, 0.5 * beta_max, beta_max};
}

SensitivityResult beta_scan(const ProtocolConfig& cfg, unsigned threads) {
  return beta_scan(cfg, default_beta_values(cfg), threads);
}

SensitivityResult beta_scan(const ProtocolConfig& cfg, const std::vector<double>& beta_values,
                            unsigned threads) {
  cfg.validate();
  std::vector<double> betas = beta_values;
  const bool has_zero = std::find(betas.begin(), betas.end(), 0.0) != betas.end();
  if (!has_zero) betas.push_back(0.0);

  const double theta = cfg.displacement.angle();
  double max_beta = 0.0;
  for (double b : betas) max_beta = std::max(max_beta, std::abs(b));
  const ForwardStage fwd = run_forward(cfg, max_beta);
  std::vector<double> means(betas.size()), vars(betas.size());
  parallel_for(
      betas.size(), threads,
      [&](size_t i) {
        const double b = betas[i];
        const ProtocolResult r = run_reverse(cfg, fwd, DisplacementSpec(std::abs(b), b < 0.0 ? theta + kPi : theta));
        means[i] = r.sy;
        vars[i] = r.var_sy;
      },
      [&](size_t i) { return "beta=" + std::to_string(betas[i]) + ", tau=" + std::to_string(cfg.tau); });

  double var0 = 0.0;
  std::vector<double> fit_b, fit_m;
  for (size_t i = 0; i < betas.size(); ++i) {
    if (betas[i] == 0.0) var0 = vars[i];
    if (betas[i] != 0.0 || has_zero) {
      fit_b.push_back(betas[i]);
      fit_m.push_back(means[i]);
    }
  }
  SensitivityResult res = moment_sensitivity(fit_b, fit_m, var0);
  res.tau = cfg.tau;
  const double chi = std::abs(cfg.effective_chi());
  if (chi > 0.0 && cfg.alpha > 0.0) {
    res.analytic_ideal = analytic_ideal_sensitivity(cfg.n_atoms, chi, cfg.alpha, cfg.tau).value;
    res.analytic_lossy = analytic_lossy_sensitivity(cfg.n_atoms, chi, cfg.alpha, cfg.kappa, cfg.tau).value;
  }
  return res;
}

double gaussian_average_cos(double c, double var) {
  if (!(var >= 0.0)) throw ValidationError("gaussian_average_cos: variance must be >= 0");
  if (var == 0.0 || c == 0.0) return 1.0;
  // Composite Simpson over +-12 sigma; the integrand is smooth and decays fast.
  const double sigma = std::sqrt(var);
  const int n = 4000;
  const double lo = -12.0 * sigma, h = 24.0 * sigma / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::cos(c * x) * std::exp(-0.5 * x * x / var);
  }
  return acc * h / 3.0 / std::sqrt(2.0 * kPi * var);
}

double semiclassical_sy(int n_atoms, double chi, double alpha, double tau, double beta,
                        double theta) {
  if (n_atoms < 1) throw ValidationError("semiclassical_sy: n_atoms must be >= 1");
  // E[cos(theta + c X)] = cos(theta) E[cos(c X)] for symmetric X.
  const double avg = std::cos(theta) * gaussian_average_cos(chi * tau, 0.25 * n_atoms);
  return -static_cast<double>(n_atoms) * chi * alpha * beta * tau * avg;
}

bool semiclassical_regime_ok(double chi, double alpha, double tau, double beta) {
  return std::abs(2.0 * chi * alpha * beta * tau) < 0.1;
}

std::vector<TauPoint> scan_tau(const ProtocolConfig& cfg, const std::vector<double>& tau_grid,
                               unsigned threads) {
  std::vector<TauPoint> pts(tau_grid.size());
  parallel_for(
      tau_grid.size(), threads,
      [&](size_t i) {
        ProtocolConfig point = cfg;
        point.tau = tau_grid[i];
        pts[i] = {tau_grid[i], beta_scan(point, 1)};
      },
      [&](size_t i) { return "tau=" + std::to_string(tau_grid[i]); });
  return pts;
}

TauOptimum optimize_tau(const ProtocolConfig& cfg, const std::vector<double>& tau_grid,
                        unsigned threads, double rel_tol) {
  if (tau_grid.size() < 3) throw ValidationError("optimize_tau: grid needs at least 3 points");
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) {
    throw ValidationError("optimize_tau: grid must be ascending");
  }
  TauOptimum out;
  out.grid = scan_tau(cfg, tau_grid, threads);
  size_t best = 0;
  for (size_t i = 1; i < out.grid.size(); ++i) {
    if (out.grid[i].result.delta_beta_sq < out.grid[best].result.delta_beta_sq) best = i;
  }
  if (best == 0 || best + 1 == out.grid.size()) {
    throw NotBracketed("optimize_tau: grid minimum at the endpoint tau=" +
                       std::to_string(out.grid[best].tau) + "; no interior minimum");
  }

  auto objective = [&](double tau) {
    ProtocolConfig point = cfg;
    point.tau = tau;
    return beta_scan(point, threads).delta_beta_sq;
  };
  const int bits = std::max(4, static_cast<int>(std::ceil(-std::log2(rel_tol))));
  std::uintmax_t max_iter = 60;
  const auto [tau_best, value] = boost::math::tools::brent_find_minima(
      objective, tau_grid[best - 1], tau_grid[best + 1], bits, max_iter);
  (void)value;
  ProtocolConfig point = cfg;
  point.tau = tau_best;
  out.tau_best = tau_best;
  out.result_best = beta_scan(point, threads);
  if (out.grid[best].result.delta_beta_sq < out.result_best.delta_beta_sq) {
    out.tau_best = out.grid[best].tau;
    out.result_best = out.grid[best].result;
  }
  const double chi = std::abs(cfg.effective_chi());
  if (cfg.kappa > 0.0 && chi > 0.0 && cfg.alpha > 0.0) {
    out.analytic = analytic_optimum(cfg.n_atoms, chi, cfg.alpha, cfg.kappa);
  }
  return out;
}

void parallel_for(size_t n, unsigned threads, const std::function<void(size_t)>& fn,
                  const std::function<std::string(size_t)>& describe) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, std::max<size_t>(n, 1)));

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  size_t failed_index = 0;
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failed.exchange(true)) {
          first_error = std::current_exception();
          failed_index = i;
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) {
    rethrow_with_context(first_error, describe ? "[" + describe(failed_index) + "] " : "");
  }
}

}  // namespace cavsense
