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
#include "nmrqip/grape.hpp"
#include "nmrqip/spin_system.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

namespace nmrqip {

/// One constant-amplitude, constant-phase period; amplitude in rad/s.
struct ControlPeriod {
  double amplitude = 0.0;
  double phase = 0.0;
  double duration = 0.0;
};

struct SimplexResult {
  std::vector<ControlPeriod> periods;
  ControlSequence controls;  // periods resampled onto a grid of dt / kSimplexResample
  std::vector<double> trace;  // best fitness after each simplex iteration
  double fitness = 0.0;       // exact, from the periods
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
};

inline constexpr std::size_t kMaxSimplexPeriods = 10;
inline constexpr std::size_t kSimplexStallWindow = 1000;
// Expanded controls use dt / kSimplexResample so rounding period lengths to
// whole steps costs little fidelity.
inline constexpr double kSimplexResample = 100.0;

/// Ensemble fitness of a period list on one channel.
inline double period_fitness(const std::vector<ControlPeriod>& periods, const SpinSystem& system,
                             const ControlChannel& channel, const Operator& goal,
                             HamiltonianMode mode = HamiltonianMode::Full,
                             const RobustnessEnsemble& ensemble = RobustnessEnsemble::nominal()) {
  double total = 0.0;
  for (const auto& m : ensemble.members()) {
    const ControlModel model = make_control_model(system, {channel}, mode, {m.rf_scale, m.field_offset_hz});
    const auto d = model.drift.rows();
    Operator u = Operator::Identity(d, d);
    for (const auto& p : periods) {
      const Operator h = model.drift + model.rf_scale * p.amplitude *
                                           (std::cos(p.phase) * model.x_controls[0] +
                                            std::sin(p.phase) * model.y_controls[0]);
      u = HermitianEigen(h).exp_minus_i(p.duration) * u;
    }
    total += m.weight * gate_fidelity(u, goal);
  }
  return total;
}

/// Periods laid onto a uniform grid of step `dt`; each period keeps at least
/// one step and its duration is rounded to whole steps.
inline ControlSequence expand_periods(const std::vector<ControlPeriod>& periods,
                                      const ControlChannel& channel, double dt) {
  std::vector<double> amp, phase;
  for (const auto& p : periods) {
    const auto steps = std::max<long>(1, std::lround(p.duration / dt));
    for (long k = 0; k < steps; ++k) {
      amp.push_back(p.amplitude);
      phase.push_back(p.phase);
    }
  }
  const auto ns = static_cast<Eigen::Index>(amp.size());
  return ControlSequence(dt, {channel}, Eigen::Map<Eigen::MatrixXd>(amp.data(), 1, ns),
                         Eigen::Map<Eigen::MatrixXd>(phase.data(), 1, ns));
}

namespace detail {

struct SimplexProblem {
  const SpinSystem* system;
  const ControlChannel* channel;
  const Operator* goal;
  HamiltonianMode mode;
  const RobustnessEnsemble* ensemble;
  double max_amplitude;
  double duration_scale;
  std::size_t n_periods;

  // Parameters per period: amplitude / max (folded into [0, 1]), phase,
  // duration / duration_scale (absolute value).
  std::vector<ControlPeriod> decode(const gsl_vector* x) const {
    std::vector<ControlPeriod> out(n_periods);
    for (std::size_t p = 0; p < n_periods; ++p) {
      const double a = std::abs(gsl_vector_get(x, 3 * p));
      out[p].amplitude = max_amplitude * std::min(a, 1.0);
      out[p].phase = gsl_vector_get(x, 3 * p + 1);
      out[p].duration = duration_scale * std::abs(gsl_vector_get(x, 3 * p + 2));
    }
    return out;
  }

  static double infidelity(const gsl_vector* x, void* self) {
    const auto* prob = static_cast<const SimplexProblem*>(self);
    try {
      return 1.0 - period_fitness(prob->decode(x), *prob->system, *prob->channel, *prob->goal,
                                  prob->mode, *prob->ensemble);
    } catch (...) {
      return GSL_POSINF;
    }
  }
};

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace detail

/// Nelder-Mead search over a few constant periods on a single channel
/// (amplitude, phase and duration per period) minimizing 1 - fitness. The
/// nominal total duration is n_steps * dt. A simplex that collapses or stops
/// improving short of the target is restarted from a new random point until
/// the iteration budget runs out.
inline SimplexResult simplex_optimize(const SpinSystem& system, const Operator& goal,
                                      std::size_t n_periods, const OptimizerConfig& config,
                                      const RobustnessEnsemble& ensemble = RobustnessEnsemble::nominal()) {
  config.validate();
  if (n_periods == 0) throw std::invalid_argument("simplex search needs at least one period");
  if (n_periods > kMaxSimplexPeriods)
    throw std::invalid_argument("simplex search is limited to " + std::to_string(kMaxSimplexPeriods) + " periods");
  if (goal.rows() != static_cast<Eigen::Index>(system.dimension()))
    throw std::invalid_argument("goal dimension does not match the spin system");
  const auto channels = config.resolved_channels(system);
  if (channels.size() != 1) throw std::invalid_argument("simplex search drives exactly one channel");

  detail::SimplexProblem prob{&system, &channels[0], &goal, config.hamiltonian, &ensemble,
                              config.max_amplitude,
                              config.dt * static_cast<double>(config.n_steps) / static_cast<double>(n_periods),
                              n_periods};
  const std::size_t n = 3 * n_periods;
  gsl_multimin_function fn{&detail::SimplexProblem::infidelity, n, &prob};

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> amp(0.05, 0.3), phase(0.0, kTwoPi);
  std::unique_ptr<gsl_vector, detail::VectorDeleter> x(gsl_vector_alloc(n)), step(gsl_vector_alloc(n)),
      best(gsl_vector_alloc(n));
  auto randomize = [&] {
    for (std::size_t p = 0; p < n_periods; ++p) {
      gsl_vector_set(x.get(), 3 * p, amp(rng));
      gsl_vector_set(x.get(), 3 * p + 1, phase(rng));
      gsl_vector_set(x.get(), 3 * p + 2, 1.0);
      gsl_vector_set(step.get(), 3 * p, 0.1);
      gsl_vector_set(step.get(), 3 * p + 1, 0.5);
      gsl_vector_set(step.get(), 3 * p + 2, 0.2);
    }
  };
  randomize();

  std::unique_ptr<gsl_multimin_fminimizer, detail::MinimizerDeleter> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());

  SimplexResult result;
  // fval is only filled in by the first iteration.
  double best_f = detail::SimplexProblem::infidelity(x.get(), &prob);
  gsl_vector_memcpy(best.get(), x.get());
  result.trace.push_back(1.0 - best_f);
  const double goal_infidelity = 1.0 - config.target_fidelity;
  result.status = OptimizerStatus::MaxIterations;
  double window_start = best_f;
  std::size_t window_iter = 0;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const int rc = gsl_multimin_fminimizer_iterate(s.get());
    result.iterations = it + 1;
    if (s->fval < best_f) {
      best_f = s->fval;
      gsl_vector_memcpy(best.get(), s->x);
    }
    result.trace.push_back(1.0 - best_f);
    if (best_f <= goal_infidelity) {
      result.status = OptimizerStatus::Converged;
      break;
    }
    // A collapsed simplex or one that has stopped improving restarts from a
    // fresh random point; the best vertex seen so far is kept.
    const bool collapsed = rc != GSL_SUCCESS || gsl_multimin_fminimizer_size(s.get()) < 1e-10;
    const bool stalled = ++window_iter >= kSimplexStallWindow &&
                         window_start - s->fval < config.stall_tolerance + 1e-6 * window_start;
    if (window_iter >= kSimplexStallWindow) {
      window_start = s->fval;
      window_iter = 0;
    }
    if (collapsed || stalled) {
      randomize();
      gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());
      window_start = detail::SimplexProblem::infidelity(x.get(), &prob);
      window_iter = 0;
      ++result.restarts;
    }
  }
  result.periods = prob.decode(best.get());
  result.fitness = period_fitness(result.periods, system, channels[0], goal, config.hamiltonian, ensemble);
  result.controls = expand_periods(result.periods, channels[0], config.dt / kSimplexResample);
  return result;
}

}  // namespace nmrqip
