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
#include "nmrqip/pulse_compiler.hpp"
#include "nmrqip/pulse_sequence.hpp"
#include "nmrqip/spin_system.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmrqip {

// Largest fit residual accepted for a first-order error model.
inline constexpr double kFirstOrderResidualTolerance = 1e-3;

/// First-order decomposition U_real = E_post U_ideal E_pre of a pulse, where
/// each E is a product of z-rotations Rz(theta) = exp(-i theta/2 Z) and
/// coupling rotations exp(-i c Z_a Z_b).
struct ErrorModel {
  std::vector<double> pre_phase;
  std::vector<double> post_phase;
  Eigen::MatrixXd pre_coupling;  // symmetric, zero diagonal; c_ab in exp(-i c Z_a Z_b)
  Eigen::MatrixXd post_coupling;
  double residual = 0.0;  // worst Frobenius misfit / sqrt(dim) over the reduced fits

  static ErrorModel zero(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    return ErrorModel{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                      Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m), 0.0};
  }

  std::size_t size() const { return pre_phase.size(); }

  bool is_zero(double tol = 0.0) const {
    for (std::size_t k = 0; k < size(); ++k)
      if (std::abs(pre_phase[k]) > tol || std::abs(post_phase[k]) > tol) return false;
    return pre_coupling.cwiseAbs().maxCoeff() <= tol && post_coupling.cwiseAbs().maxCoeff() <= tol;
  }

  Operator pre_operator() const { return error_operator(pre_phase, pre_coupling); }
  Operator post_operator() const { return error_operator(post_phase, post_coupling); }

 private:
  Operator error_operator(const std::vector<double>& phase, const Eigen::MatrixXd& coupling) const {
    const std::size_t n = size();
    Operator u = rz_all(phase, n);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::size_t{1} << n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double c = coupling(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (c != 0.0) diag += c * zz_embed(a, b, n).diagonal().real();
      }
    Eigen::VectorXcd phases(diag.size());
    for (Eigen::Index k = 0; k < diag.size(); ++k) phases(k) = std::exp(-kI * diag(k));
    return Operator(phases.asDiagonal()) * u;
  }
};

/// The rotation a pulse is meant to perform.
struct IdealRotation {
  std::vector<std::size_t> spins;
  std::vector<double> phases;
  double angle = 0.0;

  static IdealRotation of(const HardPulse& p) { return {p.spins, p.phases, p.angle}; }

  Operator on(const std::vector<std::size_t>& subset) const {
    const std::size_t n = subset.size();
    Operator u = Operator::Identity(static_cast<Eigen::Index>(std::size_t{1} << n),
                                    static_cast<Eigen::Index>(std::size_t{1} << n));
    for (std::size_t k = 0; k < spins.size(); ++k)
      for (std::size_t s = 0; s < n; ++s)
        if (subset[s] == spins[k]) u = rxy(angle, phases[k], s, n) * u;
    return u;
  }
};

namespace detail {

// Residual functor for U_sim ~ e^{i g} E_post(x) U_ideal E_pre(x) on one or two spins.
// Parameters: per spin pre z, [pre zz], per spin post z, [post zz], global phase.
struct ErrorFitFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  Operator u_sim;
  Operator u_ideal;
  std::size_t n_spins = 1;

  int inputs() const { return n_spins == 1 ? 3 : 7; }
  int values() const { return static_cast<int>(2 * u_sim.size()); }

  static ErrorModel unpack(const Eigen::VectorXd& x, std::size_t n) {
    ErrorModel m = ErrorModel::zero(n);
    const Eigen::Index half = n == 1 ? 1 : 3;
    for (std::size_t s = 0; s < n; ++s) {
      m.pre_phase[s] = x(static_cast<Eigen::Index>(s));
      m.post_phase[s] = x(half + static_cast<Eigen::Index>(s));
    }
    if (n == 2) {
      m.pre_coupling(0, 1) = m.pre_coupling(1, 0) = x(2);
      m.post_coupling(0, 1) = m.post_coupling(1, 0) = x(5);
    }
    return m;
  }

  Operator model(const Eigen::VectorXd& x) const {
    const ErrorModel m = unpack(x, n_spins);
    return std::exp(kI * x(inputs() - 1)) * m.post_operator() * u_ideal * m.pre_operator();
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const Operator diff = u_sim - model(x);
    for (Eigen::Index k = 0; k < diff.size(); ++k) {
      f(2 * k) = diff(k).real();
      f(2 * k + 1) = diff(k).imag();
    }
    return 0;
  }

  // Central differences with an absolute step. The fit starts at or near zero
  // where a step relative to |x| would vanish.
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
    constexpr double h = 1e-7;
    Eigen::VectorXd xp = x, xm = x, fp(values()), fm(values());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      (*this)(xp, fp);
      (*this)(xm, fm);
      jac.col(j) = (fp - fm) / (2 * h);
      xp(j) = xm(j) = x(j);
    }
    return 0;
  }
};

inline double wrap_angle(double a) { return std::remainder(a, kTwoPi); }

// If U G U^dagger = s G for s = +-1, pre/post angles along G trade off; only
// post + s*pre is fixed. Split that total evenly.
inline std::optional<double> conjugation_sign(const Operator& u, const Operator& g) {
  const Operator conj = u * g * u.adjoint();
  if ((conj - g).cwiseAbs().maxCoeff() < 1e-9) return 1.0;
  if ((conj + g).cwiseAbs().maxCoeff() < 1e-9) return -1.0;
  return std::nullopt;
}

// Rz angles repeat every 2 pi and ZZ coefficients every pi, up to global phase.
inline void split_symmetric(double& pre, double& post, double s, double period) {
  const double total = std::remainder(post + s * pre, period);
  post = 0.5 * total;
  pre = s * 0.5 * total;
}

inline Eigen::VectorXd minimize_fit(const ErrorFitFunctor& functor, Eigen::VectorXd x) {
  // The initial trust region scales with |x|; starting the global phase one
  // turn up keeps it from collapsing when every angle starts near zero.
  x(functor.inputs() - 1) = 0.0;
  x(functor.inputs() - 1) = kTwoPi + std::arg((functor.model(x).adjoint() * functor.u_sim).trace());
  Eigen::LevenbergMarquardt<ErrorFitFunctor> lm(const_cast<ErrorFitFunctor&>(functor));
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-12;
  lm.parameters.maxfev = 4000;
  lm.minimize(x);
  return x;
}

// `seed` holds starting pre/post z angles per spin; the pair fit starts from
// the single-spin results because large Zeeman phases can trap it at zero.
inline ErrorModel fit_error_model(const Operator& u_sim, const Operator& u_ideal, std::size_t n,
                                  const ErrorModel* seed = nullptr) {
  ErrorFitFunctor functor{u_sim, u_ideal, n};
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(functor.inputs());
  if (seed) {
    const Eigen::Index half = n == 1 ? 1 : 3;
    for (std::size_t s = 0; s < n; ++s) {
      x0(static_cast<Eigen::Index>(s)) = seed->pre_phase[s];
      x0(half + static_cast<Eigen::Index>(s)) = seed->post_phase[s];
    }
  }
  const double d = static_cast<double>(u_sim.rows());
  auto misfit = [&](const Eigen::VectorXd& v) { return (u_sim - functor.model(v)).norm() / std::sqrt(d); };
  Eigen::VectorXd x = minimize_fit(functor, x0);
  if (seed && misfit(x) > kFirstOrderResidualTolerance) {
    Eigen::VectorXd alt = minimize_fit(functor, Eigen::VectorXd::Zero(functor.inputs()));
    if (misfit(alt) < misfit(x)) x = alt;
  }
  ErrorModel m = ErrorFitFunctor::unpack(x, n);
  m.residual = misfit(x);

  for (std::size_t s = 0; s < n; ++s) {
    m.pre_phase[s] = wrap_angle(m.pre_phase[s]);
    m.post_phase[s] = wrap_angle(m.post_phase[s]);
    if (auto sign = conjugation_sign(u_ideal, pauli_embed(Axis::Z, s, n)))
      split_symmetric(m.pre_phase[s], m.post_phase[s], *sign, kTwoPi);
  }
  if (n == 2) {
    double pre = std::remainder(m.pre_coupling(0, 1), kPi);
    double post = std::remainder(m.post_coupling(0, 1), kPi);
    if (auto sign = conjugation_sign(u_ideal, zz_embed(0, 1, 2))) split_symmetric(pre, post, *sign, kPi);
    {
      m.pre_coupling(0, 1) = m.pre_coupling(1, 0) = pre;
      m.post_coupling(0, 1) = m.post_coupling(1, 0) = post;
    }
  }
  return m;
}

inline PulseEvent restrict_pulse(const PulseEvent& pulse, const std::vector<std::size_t>& subset) {
  if (const auto* p = std::get_if<HardPulse>(&pulse)) {
    HardPulse r;
    r.angle = p->angle;
    r.duration = p->duration;
    for (std::size_t k = 0; k < p->spins.size(); ++k)
      for (std::size_t s = 0; s < subset.size(); ++s)
        if (subset[s] == p->spins[k]) {
          r.spins.push_back(s);
          r.phases.push_back(p->phases[k]);
        }
    if (r.spins.empty()) return Delay{p->duration};
    return r;
  }
  return pulse;
}

}  // namespace detail

/// Fits phase and coupling errors of a real pulse against its ideal rotation
/// from one-spin and two-spin reduced simulations. Phase errors come from the
/// single-spin fits and coupling errors from the pairwise fits. Angles that
/// the ideal rotation cannot distinguish between before and after are split
/// evenly.
inline ErrorModel estimate_first_order_errors(const PulseEvent& pulse, const SpinSystem& system,
                                              const IdealRotation& ideal,
                                              double residual_tolerance = kFirstOrderResidualTolerance) {
  if (std::holds_alternative<Delay>(pulse) || std::holds_alternative<VirtualZ>(pulse))
    throw std::invalid_argument("error estimation needs a pulse event");
  const std::size_t n = system.size();
  ErrorModel model = ErrorModel::zero(n);

  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<std::size_t> subset{k};
    const SpinSystem sub = system.subsystem(subset);
    const Operator u_sim = event_propagator(detail::restrict_pulse(pulse, subset), sub);
    const ErrorModel fit = detail::fit_error_model(u_sim, ideal.on(subset), 1);
    model.pre_phase[k] = fit.pre_phase[0];
    model.post_phase[k] = fit.post_phase[0];
    model.residual = std::max(model.residual, fit.residual);
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::vector<std::size_t> subset{a, b};
      const SpinSystem sub = system.subsystem(subset);
      const Operator u_sim = event_propagator(detail::restrict_pulse(pulse, subset), sub);
      ErrorModel seed = ErrorModel::zero(2);
      seed.pre_phase = {model.pre_phase[a], model.pre_phase[b]};
      seed.post_phase = {model.post_phase[a], model.post_phase[b]};
      const ErrorModel fit = detail::fit_error_model(u_sim, ideal.on(subset), 2, &seed);
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      model.pre_coupling(ia, ib) = model.pre_coupling(ib, ia) = fit.pre_coupling(0, 1);
      model.post_coupling(ia, ib) = model.post_coupling(ib, ia) = fit.post_coupling(0, 1);
      model.residual = std::max(model.residual, fit.residual);
    }
  if (model.residual > residual_tolerance)
    throw std::runtime_error("pulse is outside the first-order error regime (fit residual " +
                             std::to_string(model.residual) + ")");
  return model;
}

inline ErrorModel estimate_first_order_errors(const HardPulse& pulse, const SpinSystem& system,
                                              double residual_tolerance = kFirstOrderResidualTolerance) {
  return estimate_first_order_errors(PulseEvent{pulse}, system, IdealRotation::of(pulse),
                                     residual_tolerance);
}

/// Raised when cancelling a coupling error would need a negative delay.
class InfeasibleCorrection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cancels first-order pulse errors.
///
/// Phase errors become virtual z-rotations around the pulse. Coupling errors
/// commute with the secular drift, so a pre-error merges into the closest
/// earlier delay and a post-error into the closest later one (only virtual
/// rotations may sit in between); that delay is shortened by the least-squares
/// solution over all coupled pairs, and the Zeeman evolution it no longer
/// performs is restored by virtual rotations. Errors with no adjacent delay
/// are left in place.
inline PulseSequence correct_delays(const PulseSequence& seq,
                                    const std::map<std::size_t, ErrorModel>& models,
                                    const SpinSystem& system) {
  detail::require_register(seq, system);
  const std::size_t n = system.size();
  const auto& events = seq.events;

  auto adjacent_delay = [&](std::size_t from, int step) -> std::optional<std::size_t> {
    for (auto i = static_cast<long>(from) + step; i >= 0 && i < static_cast<long>(events.size()); i += step) {
      const auto& e = events[static_cast<std::size_t>(i)];
      if (std::holds_alternative<Delay>(e)) return static_cast<std::size_t>(i);
      if (!std::holds_alternative<VirtualZ>(e)) return std::nullopt;
    }
    return std::nullopt;
  };

  // Coupling angle each delay must give up, per pair.
  std::map<std::size_t, Eigen::MatrixXd> surplus;
  for (const auto& [index, model] : models) {
    if (index >= events.size() || std::holds_alternative<Delay>(events[index]) ||
        std::holds_alternative<VirtualZ>(events[index]))
      throw std::invalid_argument("error model attached to a non-pulse event");
    if (model.size() != n) throw std::invalid_argument("error model size mismatch");
    auto absorb = [&](std::optional<std::size_t> d, const Eigen::MatrixXd& c) {
      if (!d || c.cwiseAbs().maxCoeff() == 0.0) return;
      auto [it, inserted] = surplus.try_emplace(*d, Eigen::MatrixXd::Zero(c.rows(), c.cols()));
      it->second += c;
    };
    absorb(adjacent_delay(index, -1), model.pre_coupling);
    absorb(adjacent_delay(index, +1), model.post_coupling);
  }

  std::map<std::size_t, double> shortening;
  for (const auto& [d, need] : surplus) {
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double kappa = 0.5 * kPi * system.j(a, b) + kPi * system.dipolar(a, b);
        num += kappa * need(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        den += kappa * kappa;
      }
    if (den == 0.0) continue;
    const double dt = num / den;
    const double remaining = std::get<Delay>(events[d]).duration - dt;
    if (remaining < 0.0)
      throw InfeasibleCorrection("coupling correction needs a negative delay at event " +
                                 std::to_string(d) + " (" + std::to_string(remaining) + " s)");
    shortening[d] = dt;
  }

  PulseSequence out(n);
  out.frame_record = seq.frame_record;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto model = models.find(i);
    if (model != models.end())
      for (std::size_t k = 0; k < n; ++k)
        if (model->second.pre_phase[k] != 0.0) out.add(VirtualZ{k, -model->second.pre_phase[k]});
    if (auto s = shortening.find(i); s != shortening.end()) {
      out.add(Delay{std::get<Delay>(events[i]).duration - s->second});
      for (std::size_t k = 0; k < n; ++k) {
        const double nu = system.spin(k).offset_hz;
        if (nu != 0.0) out.add(VirtualZ{k, kTwoPi * nu * s->second});
      }
    } else {
      out.add(events[i]);
    }
    if (model != models.end())
      for (std::size_t k = 0; k < n; ++k)
        if (model->second.post_phase[k] != 0.0) out.add(VirtualZ{k, -model->second.post_phase[k]});
  }
  return out;
}

/// Error models for every finite-duration hard pulse in the sequence.
inline std::map<std::size_t, ErrorModel> estimate_sequence_errors(
    const PulseSequence& seq, const SpinSystem& system,
    double residual_tolerance = kFirstOrderResidualTolerance) {
  detail::require_register(seq, system);
  std::map<std::size_t, ErrorModel> models;
  for (std::size_t i = 0; i < seq.events.size(); ++i)
    if (const auto* p = std::get_if<HardPulse>(&seq.events[i]); p && p->duration > 0.0)
      models.emplace(i, estimate_first_order_errors(*p, system, residual_tolerance));
  return models;
}

/// Estimate, correct, and phase-track in one pass.
inline PulseSequence correct_sequence(const PulseSequence& seq, const SpinSystem& system) {
  return phase_track(correct_delays(seq, estimate_sequence_errors(seq, system), system));
}

}  // namespace nmrqip
