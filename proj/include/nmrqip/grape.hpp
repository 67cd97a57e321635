// Copyright 2026 The nmrqip Authors
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

#pragma once

#include "nmrqip/dynamics.hpp"
#include "nmrqip/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmrqip {

enum class GradientMode {
  Exact,             // eigenbasis derivative of each step exponential
  FirstOrder,        // dU_k ~ -i dt H_u U_k
  FiniteDifference,  // central differences
};

enum class OptimizerMethod { SteepestAscent, ConjugateGradient, Simplex };

enum class StallAction { Stop, Restart };

enum class OptimizerStatus { Converged, MaxIterations, Stalled, LineSearchFailed };

inline std::string to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::Stalled: return "stalled";
    case OptimizerStatus::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

struct EnsembleMember {
  double rf_scale = 1.0;
  double field_offset_hz = 0.0;
  double weight = 1.0;
};

/// Weighted set of inhomogeneity conditions; weights are normalized on construction.
class RobustnessEnsemble {
 public:
  explicit RobustnessEnsemble(std::vector<EnsembleMember> members) : members_(std::move(members)) {
    if (members_.empty()) throw std::invalid_argument("robustness ensemble is empty");
    double total = 0.0;
    for (const auto& m : members_) {
      if (!(m.weight >= 0.0) || !std::isfinite(m.weight))
        throw std::invalid_argument("ensemble weights must be non-negative");
      if (!(m.rf_scale > 0.0) || !std::isfinite(m.rf_scale) || !std::isfinite(m.field_offset_hz))
        throw std::invalid_argument("ensemble rf_scale must be positive and offsets finite");
      total += m.weight;
    }
    if (!(total > 0.0)) throw std::invalid_argument("ensemble weights sum to zero");
    for (auto& m : members_) m.weight /= total;
  }

  static RobustnessEnsemble nominal() { return RobustnessEnsemble({EnsembleMember{}}); }

  /// Uniformly weighted grid over every (rf_scale, offset) combination.
  static RobustnessEnsemble grid(const std::vector<double>& rf_scales,
                                 const std::vector<double>& offsets_hz) {
    std::vector<EnsembleMember> m;
    for (double rf : rf_scales)
      for (double off : offsets_hz) m.push_back({rf, off, 1.0});
    return RobustnessEnsemble(std::move(m));
  }

  /// 3x3 grid: rf_scale in {1-a, 1, 1+a}, offset in {-b, 0, b}.
  static RobustnessEnsemble default_grid(double rf_spread, double offset_spread_hz) {
    return grid({1.0 - rf_spread, 1.0, 1.0 + rf_spread},
                {-offset_spread_hz, 0.0, offset_spread_hz});
  }

  const std::vector<EnsembleMember>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<EnsembleMember> members_;
};

struct OptimizerConfig {
  std::size_t n_steps = 100;
  double dt = 1e-5;
  std::size_t max_iterations = 1000;
  double target_fidelity = 0.999;
  double max_amplitude = kTwoPi * 10e3;  // rad/s, per quadrature pair
  GradientMode gradient_mode = GradientMode::Exact;
  double fd_relative_step = 1e-7;  // finite-difference step as a fraction of max_amplitude
  OptimizerMethod method = OptimizerMethod::ConjugateGradient;
  std::uint64_t seed = 0;
  HamiltonianMode hamiltonian = HamiltonianMode::Full;
  // One channel per species at its carrier when empty.
  std::vector<ControlChannel> channels;
  double armijo = 1e-4;
  double backtrack = 0.5;
  std::size_t max_backtracks = 40;
  std::size_t stall_window = 25;
  double stall_tolerance = 1e-10;
  StallAction on_stall = StallAction::Stop;
  bool parallel = true;

  void validate() const {
    if (n_steps < 1) throw std::invalid_argument("n_steps must be at least 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (!(target_fidelity > 0.0 && target_fidelity <= 1.0))
      throw std::invalid_argument("target_fidelity must lie in (0, 1]");
    if (!(max_amplitude > 0.0) || !std::isfinite(max_amplitude))
      throw std::invalid_argument("max_amplitude must be positive");
    if (!(fd_relative_step > 0.0)) throw std::invalid_argument("fd_relative_step must be positive");
    if (!(armijo > 0.0 && armijo < 1.0)) throw std::invalid_argument("armijo constant must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("backtrack factor must lie in (0, 1)");
    if (stall_window < 1) throw std::invalid_argument("stall_window must be at least 1");
  }

  std::vector<ControlChannel> resolved_channels(const SpinSystem& system) const {
    if (!channels.empty()) return channels;
    std::vector<ControlChannel> out;
    for (const auto& s : system.species())
      if (!system.spins_of_species(s.name).empty()) out.push_back({s.name, 0.0});
    return out;
  }
};

struct FitnessGradient {
  double fitness = 0.0;
  Eigen::MatrixXd d_ux;  // channels x steps
  Eigen::MatrixXd d_uy;
};

namespace detail {

inline std::vector<ControlModel> ensemble_models(const SpinSystem& system,
                                                 const std::vector<ControlChannel>& channels,
                                                 HamiltonianMode mode,
                                                 const RobustnessEnsemble& ensemble) {
  std::vector<ControlModel> models;
  for (const auto& m : ensemble.members())
    models.push_back(make_control_model(system, channels, mode, {m.rf_scale, m.field_offset_hz}));
  return models;
}

inline Operator total_propagator(const ControlModel& model, const Eigen::MatrixXd& ux,
                                 const Eigen::MatrixXd& uy, double dt) {
  const Eigen::Index d = model.drift.rows();
  Operator u = Operator::Identity(d, d);
  for (Eigen::Index k = 0; k < ux.cols(); ++k)
    u = HermitianEigen(model.step_hamiltonian(ux, uy, k)).exp_minus_i(dt) * u;
  return u;
}

inline double member_fitness(const ControlModel& model, const Eigen::MatrixXd& ux,
                             const Eigen::MatrixXd& uy, double dt, const Operator& goal) {
  return gate_fidelity(total_propagator(model, ux, uy, dt), goal);
}

// d/du of tr(P exp(-i H dt)) for H = V diag(l) V^dagger and dH = C, written
// as sum_ab Q_ba C'_ab L_ab with Q = V^dagger P V, C' = V^dagger C V and L the
// divided differences of exp(-i l dt).
inline Complex exact_step_derivative(const Operator& q, const Operator& c_eig, const Operator& l) {
  return (q.transpose().cwiseProduct(c_eig).cwiseProduct(l)).sum();
}

inline FitnessGradient member_gradient(const ControlModel& model, const Eigen::MatrixXd& ux,
                                       const Eigen::MatrixXd& uy, double dt, const Operator& goal,
                                       GradientMode mode, double fd_step) {
  const Eigen::Index nc = ux.rows(), ns = ux.cols();
  const Eigen::Index d = model.drift.rows();
  const double dd = static_cast<double>(d) * static_cast<double>(d);
  FitnessGradient out{0.0, Eigen::MatrixXd::Zero(nc, ns), Eigen::MatrixXd::Zero(nc, ns)};

  if (mode == GradientMode::FiniteDifference) {
    out.fitness = member_fitness(model, ux, uy, dt, goal);
    Eigen::MatrixXd x = ux, y = uy;
    for (Eigen::Index c = 0; c < nc; ++c)
      for (Eigen::Index k = 0; k < ns; ++k) {
        x(c, k) = ux(c, k) + fd_step;
        const double xp = member_fitness(model, x, uy, dt, goal);
        x(c, k) = ux(c, k) - fd_step;
        const double xm = member_fitness(model, x, uy, dt, goal);
        x(c, k) = ux(c, k);
        y(c, k) = uy(c, k) + fd_step;
        const double yp = member_fitness(model, ux, y, dt, goal);
        y(c, k) = uy(c, k) - fd_step;
        const double ym = member_fitness(model, ux, y, dt, goal);
        y(c, k) = uy(c, k);
        out.d_ux(c, k) = (xp - xm) / (2 * fd_step);
        out.d_uy(c, k) = (yp - ym) / (2 * fd_step);
      }
    return out;
  }

  std::vector<HermitianEigen> eig;
  std::vector<Operator> steps;
  eig.reserve(static_cast<std::size_t>(ns));
  steps.reserve(static_cast<std::size_t>(ns));
  for (Eigen::Index k = 0; k < ns; ++k) {
    eig.emplace_back(model.step_hamiltonian(ux, uy, k));
    steps.push_back(eig.back().exp_minus_i(dt));
  }
  // forward[k] = U_k ... U_1 (forward[0] = I); g = tr(G^dagger U).
  std::vector<Operator> forward(static_cast<std::size_t>(ns) + 1);
  forward[0] = Operator::Identity(d, d);
  for (Eigen::Index k = 0; k < ns; ++k)
    forward[static_cast<std::size_t>(k) + 1] = steps[static_cast<std::size_t>(k)] * forward[static_cast<std::size_t>(k)];
  const Complex g = (goal.adjoint() * forward.back()).trace();
  out.fitness = std::norm(g) / dd;

  Operator back = goal.adjoint();  // G^dagger U_K ... U_{k+1}
  for (Eigen::Index k = ns - 1; k >= 0; --k) {
    const auto ks = static_cast<std::size_t>(k);
    const Operator p = forward[ks] * back;  // dg = tr(P dU_k)
    for (Eigen::Index c = 0; c < nc; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      Complex dgx, dgy;
      if (mode == GradientMode::Exact) {
        const auto& e = eig[ks];
        Operator l(d, d);
        for (Eigen::Index a = 0; a < d; ++a)
          for (Eigen::Index b = 0; b < d; ++b) {
            const double la = e.values(a), lb = e.values(b);
            const Complex ea = std::exp(-kI * (la * dt)), eb = std::exp(-kI * (lb * dt));
            l(a, b) = std::abs((la - lb) * dt) > 1e-8 ? (ea - eb) / (la - lb)
                                                      : -kI * dt * std::exp(-kI * (0.5 * (la + lb) * dt));
          }
        const Operator q = e.vectors.adjoint() * p * e.vectors;
        dgx = exact_step_derivative(q, e.vectors.adjoint() * model.x_controls[cs] * e.vectors, l);
        dgy = exact_step_derivative(q, e.vectors.adjoint() * model.y_controls[cs] * e.vectors, l);
      } else {
        const Operator up = steps[ks] * p;
        dgx = -kI * dt * (up.cwiseProduct(model.x_controls[cs].transpose())).sum();
        dgy = -kI * dt * (up.cwiseProduct(model.y_controls[cs].transpose())).sum();
      }
      out.d_ux(c, k) = 2.0 * model.rf_scale * std::real(std::conj(g) * dgx) / dd;
      out.d_uy(c, k) = 2.0 * model.rf_scale * std::real(std::conj(g) * dgy) / dd;
    }
    back = back * steps[ks];
  }
  return out;
}

// Runs f(member) for every member, concurrently if asked, and returns results
// in member order so the weighted sums are independent of scheduling.
template <class F>
auto for_members(std::size_t n, bool parallel, F&& f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out;
  out.reserve(n);
  if (!parallel || n == 1) {
    for (std::size_t m = 0; m < n; ++m) out.push_back(f(m));
    return out;
  }
  std::vector<std::future<R>> jobs;
  for (std::size_t m = 0; m < n; ++m) jobs.push_back(std::async(std::launch::async, f, m));
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace detail

/// Weighted mean over the ensemble of |Tr(U_sim^dagger U_goal)|^2 / d^2.
inline double fitness(const ControlSequence& controls, const SpinSystem& system, const Operator& goal,
                      HamiltonianMode mode = HamiltonianMode::Full,
                      const RobustnessEnsemble& ensemble = RobustnessEnsemble::nominal()) {
  if (goal.rows() != static_cast<Eigen::Index>(system.dimension()) || goal.cols() != goal.rows())
    throw std::invalid_argument("goal dimension does not match the spin system");
  const auto models = detail::ensemble_models(system, controls.channels(), mode, ensemble);
  const Eigen::MatrixXd ux = controls.ux(), uy = controls.uy();
  double total = 0.0;
  for (std::size_t m = 0; m < models.size(); ++m)
    total += ensemble.members()[m].weight * detail::member_fitness(models[m], ux, uy, controls.dt(), goal);
  return total;
}

/// Fitness and its gradient with respect to the x and y quadratures of every
/// step of every channel. `fd_step` is the absolute finite-difference step in
/// rad/s.
inline FitnessGradient fitness_gradient(const ControlSequence& controls, const SpinSystem& system,
                                        const Operator& goal, GradientMode mode,
                                        HamiltonianMode hamiltonian = HamiltonianMode::Full,
                                        const RobustnessEnsemble& ensemble = RobustnessEnsemble::nominal(),
                                        double fd_step = 1e-3, bool parallel = true) {
  if (goal.rows() != static_cast<Eigen::Index>(system.dimension()) || goal.cols() != goal.rows())
    throw std::invalid_argument("goal dimension does not match the spin system");
  const auto models = detail::ensemble_models(system, controls.channels(), hamiltonian, ensemble);
  const Eigen::MatrixXd ux = controls.ux(), uy = controls.uy();
  const auto parts = detail::for_members(models.size(), parallel, [&](std::size_t m) {
    return detail::member_gradient(models[m], ux, uy, controls.dt(), goal, mode, fd_step);
  });
  FitnessGradient out{0.0, Eigen::MatrixXd::Zero(ux.rows(), ux.cols()), Eigen::MatrixXd::Zero(ux.rows(), ux.cols())};
  for (std::size_t m = 0; m < parts.size(); ++m) {
    const double w = ensemble.members()[m].weight;
    out.fitness += w * parts[m].fitness;
    out.d_ux += w * parts[m].d_ux;
    out.d_uy += w * parts[m].d_uy;
  }
  return out;
}

struct OptimizerResult {
  ControlSequence controls;
  std::vector<double> trace;  // fitness after each accepted iteration; trace[0] is the start
  double fitness = 0.0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
};

/// Seeded random start: amplitudes uniform in [0, 0.2 max], phases uniform in [0, 2 pi).
inline ControlSequence random_controls(const OptimizerConfig& config,
                                       const std::vector<ControlChannel>& channels,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(0.0, 0.2 * config.max_amplitude), phase(0.0, kTwoPi);
  const auto nc = static_cast<Eigen::Index>(channels.size());
  const auto ns = static_cast<Eigen::Index>(config.n_steps);
  Eigen::MatrixXd a(nc, ns), p(nc, ns);
  for (Eigen::Index c = 0; c < nc; ++c)
    for (Eigen::Index k = 0; k < ns; ++k) {
      a(c, k) = amp(rng);
      p(c, k) = phase(rng);
    }
  return ControlSequence(config.dt, channels, std::move(a), std::move(p));
}

namespace detail {

// Scales any step whose quadrature pair exceeds the amplitude bound back onto it.
inline void clip_amplitudes(Eigen::MatrixXd& ux, Eigen::MatrixXd& uy, double max_amplitude) {
  for (Eigen::Index i = 0; i < ux.size(); ++i) {
    const double a = std::hypot(ux(i), uy(i));
    if (a > max_amplitude) {
      ux(i) *= max_amplitude / a;
      uy(i) *= max_amplitude / a;
    }
  }
}

}  // namespace detail

/// Gradient ascent on the ensemble fitness (GRAPE).
///
/// Steepest ascent or Polak-Ribiere conjugate gradients over the control
/// quadratures, with Armijo backtracking on the clipped trial point so every
/// accepted step increases the fitness. Stops at the target fidelity, the
/// iteration budget, a stall, or a failed line search; none of these throw.
inline OptimizerResult grape_optimize(const SpinSystem& system, const Operator& goal,
                                      const OptimizerConfig& config,
                                      const RobustnessEnsemble& ensemble = RobustnessEnsemble::nominal(),
                                      const ControlSequence* initial = nullptr) {
  config.validate();
  if (config.method == OptimizerMethod::Simplex)
    throw std::invalid_argument("grape_optimize runs gradient methods; use simplex_optimize");
  const auto channels = config.resolved_channels(system);
  if (channels.empty()) throw std::invalid_argument("no control channels");
  std::mt19937_64 rng(config.seed);
  ControlSequence start = initial ? *initial : random_controls(config, channels, rng);
  if (initial && (start.n_steps() != config.n_steps || start.dt() != config.dt))
    throw std::invalid_argument("initial controls do not match the configured grid");

  Eigen::MatrixXd ux = start.ux(), uy = start.uy();
  detail::clip_amplitudes(ux, uy, config.max_amplitude);
  const double fd_step = config.fd_relative_step * config.max_amplitude;
  auto evaluate = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return fitness_gradient(ControlSequence::from_quadratures(config.dt, channels, x, y), system, goal,
                            config.gradient_mode, config.hamiltonian, ensemble, fd_step, config.parallel);
  };
  auto value = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return fitness(ControlSequence::from_quadratures(config.dt, channels, x, y), system, goal,
                   config.hamiltonian, ensemble);
  };

  OptimizerResult result;
  FitnessGradient cur = evaluate(ux, uy);
  result.trace.push_back(cur.fitness);
  Eigen::MatrixXd best_x = ux, best_y = uy;
  double best = cur.fitness;
  Eigen::MatrixXd dir_x = cur.d_ux, dir_y = cur.d_uy;
  Eigen::MatrixXd prev_gx, prev_gy;
  double step = 0.0;
  std::size_t since_restart = 0;

  auto finish = [&](OptimizerStatus s) {
    result.status = s;
    result.fitness = best;
    result.controls = ControlSequence::from_quadratures(config.dt, channels, best_x, best_y);
    return result;
  };

  for (std::size_t it = 0;; ++it) {
    if (cur.fitness >= config.target_fidelity) return finish(OptimizerStatus::Converged);
    if (it >= config.max_iterations) return finish(OptimizerStatus::MaxIterations);

    if (config.method == OptimizerMethod::ConjugateGradient && prev_gx.size() > 0) {
      const double num = (cur.d_ux.cwiseProduct(cur.d_ux - prev_gx)).sum() +
                         (cur.d_uy.cwiseProduct(cur.d_uy - prev_gy)).sum();
      const double den = prev_gx.squaredNorm() + prev_gy.squaredNorm();
      const double beta = den > 0.0 ? std::max(0.0, num / den) : 0.0;
      dir_x = cur.d_ux + beta * dir_x;
      dir_y = cur.d_uy + beta * dir_y;
      if ((dir_x.cwiseProduct(cur.d_ux)).sum() + (dir_y.cwiseProduct(cur.d_uy)).sum() <= 0.0) {
        dir_x = cur.d_ux;
        dir_y = cur.d_uy;
      }
    } else {
      dir_x = cur.d_ux;
      dir_y = cur.d_uy;
    }
    const double dir_max = std::max(dir_x.cwiseAbs().maxCoeff(), dir_y.cwiseAbs().maxCoeff());
    if (!(dir_max > 0.0)) return finish(OptimizerStatus::Stalled);
    // First trial moves the largest quadrature by 5% of the bound; later ones
    // start from twice the last accepted step.
    step = step > 0.0 ? 2.0 * step : 0.05 * config.max_amplitude / dir_max;

    bool accepted = false;
    for (std::size_t bt = 0; bt <= config.max_backtracks; ++bt, step *= config.backtrack) {
      Eigen::MatrixXd tx = ux + step * dir_x, ty = uy + step * dir_y;
      detail::clip_amplitudes(tx, ty, config.max_amplitude);
      const double predicted = ((tx - ux).cwiseProduct(cur.d_ux)).sum() + ((ty - uy).cwiseProduct(cur.d_uy)).sum();
      if (!(predicted > 0.0)) continue;
      const double trial = value(tx, ty);
      if (trial >= cur.fitness + config.armijo * predicted) {
        prev_gx = cur.d_ux;
        prev_gy = cur.d_uy;
        ux = std::move(tx);
        uy = std::move(ty);
        cur = evaluate(ux, uy);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (config.method == OptimizerMethod::ConjugateGradient && prev_gx.size() > 0) {
        // Retry from steepest ascent before giving up.
        prev_gx.resize(0, 0);
        prev_gy.resize(0, 0);
        step = 0.0;
        continue;
      }
      return finish(OptimizerStatus::LineSearchFailed);
    }
    result.iterations = it + 1;
    result.trace.push_back(cur.fitness);
    if (cur.fitness > best) {
      best = cur.fitness;
      best_x = ux;
      best_y = uy;
    }
    ++since_restart;
    if (since_restart >= config.stall_window) {
      const double old = result.trace[result.trace.size() - 1 - config.stall_window];
      if ((cur.fitness - old) < config.stall_tolerance * std::max(old, 1e-300)) {
        if (config.on_stall == StallAction::Stop) return finish(OptimizerStatus::Stalled);
        const ControlSequence fresh = random_controls(config, channels, rng);
        ux = fresh.ux();
        uy = fresh.uy();
        cur = evaluate(ux, uy);
        prev_gx.resize(0, 0);
        prev_gy.resize(0, 0);
        step = 0.0;
        since_restart = 0;
        ++result.restarts;
      }
    }
  }
}

struct SweepPoint {
  double rf_scale = 1.0;
  double offset_hz = 0.0;
  double avg_fidelity = 0.0;    // normalized |Tr(U_sim^dagger U_goal)|^2 / d^2
  double worst_fidelity = 0.0;  // worst-case input state
};

/// Fidelity of fixed controls over an rf_scale x field-offset grid, rf_scale
/// outermost. Points run concurrently, at most `max_parallel` at a time, and
/// come back in grid order.
inline std::vector<SweepPoint> fidelity_sweep(const ControlSequence& controls, const SpinSystem& system,
                                              const Operator& goal, const std::vector<double>& rf_scales,
                                              const std::vector<double>& offsets_hz,
                                              HamiltonianMode mode = HamiltonianMode::Full,
                                              std::size_t max_parallel = 1) {
  if (goal.rows() != static_cast<Eigen::Index>(system.dimension()) || goal.cols() != goal.rows())
    throw std::invalid_argument("goal dimension does not match the spin system");
  if (max_parallel < 1) throw std::invalid_argument("max_parallel must be at least 1");
  std::vector<SweepPoint> out;
  for (double r : rf_scales)
    for (double o : offsets_hz) {
      if (!(r > 0.0) || !std::isfinite(o)) throw std::invalid_argument("invalid sweep point");
      out.push_back({r, o, 0.0, 0.0});
    }
  const auto eval = [&](SweepPoint& p) {
    const Operator u = evolve_controls(system, controls, mode, {p.rf_scale, p.offset_hz});
    p.avg_fidelity = gate_fidelity(u, goal);
    p.worst_fidelity = worst_case_state_fidelity(u, goal);
  };
  for (std::size_t start = 0; start < out.size(); start += max_parallel) {
    const std::size_t stop = std::min(out.size(), start + max_parallel);
    std::vector<std::future<void>> jobs;
    for (std::size_t i = start; i < stop; ++i)
      jobs.push_back(std::async(max_parallel > 1 ? std::launch::async : std::launch::deferred,
                                [&, i] { eval(out[i]); }));
    for (auto& j : jobs) j.get();
  }
  return out;
}

}  // namespace nmrqip
