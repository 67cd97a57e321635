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

#include "nmrqip/hamiltonian.hpp"
#include "nmrqip/operator.hpp"
#include "nmrqip/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmrqip {

struct ControlChannel {
  std::string species;
  double carrier_offset_hz = 0.0;  // transmitter position relative to the species carrier
};

/// Piecewise-constant RF controls with a uniform timestep.
///
/// Amplitudes are nutation frequencies in rad/s and are never negative; a
/// sign flip lives in the phase. Row c of the amplitude/phase arrays is
/// channel c, column k is step k.
class ControlSequence {
 public:
  ControlSequence() = default;

  ControlSequence(double dt, std::vector<ControlChannel> channels, Eigen::MatrixXd amplitudes,
                  Eigen::MatrixXd phases)
      : dt_(dt),
        channels_(std::move(channels)),
        amplitudes_(std::move(amplitudes)),
        phases_(std::move(phases)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_))
      throw std::invalid_argument("control timestep must be positive");
    const auto nc = static_cast<Eigen::Index>(channels_.size());
    if (amplitudes_.rows() != nc || phases_.rows() != nc || amplitudes_.cols() != phases_.cols())
      throw std::invalid_argument("control arrays must be channels x steps");
    if (amplitudes_.size() > 0 && amplitudes_.minCoeff() < 0.0)
      throw std::invalid_argument("control amplitudes must be non-negative");
    if (!amplitudes_.allFinite() || !phases_.allFinite())
      throw std::invalid_argument("control arrays must be finite");
    for (std::size_t a = 0; a < channels_.size(); ++a)
      for (std::size_t b = a + 1; b < channels_.size(); ++b)
        if (channels_[a].species == channels_[b].species)
          throw std::invalid_argument("at most one channel per species");
  }

  static ControlSequence zeros(double dt, std::vector<ControlChannel> channels,
                               std::size_t n_steps) {
    const auto nc = static_cast<Eigen::Index>(channels.size());
    const auto ns = static_cast<Eigen::Index>(n_steps);
    return ControlSequence(dt, std::move(channels), Eigen::MatrixXd::Zero(nc, ns),
                           Eigen::MatrixXd::Zero(nc, ns));
  }

  /// From Cartesian quadratures u_x = a cos(phase), u_y = a sin(phase).
  static ControlSequence from_quadratures(double dt, std::vector<ControlChannel> channels,
                                          const Eigen::MatrixXd& ux, const Eigen::MatrixXd& uy) {
    Eigen::MatrixXd amp(ux.rows(), ux.cols());
    Eigen::MatrixXd phase(ux.rows(), ux.cols());
    for (Eigen::Index c = 0; c < ux.rows(); ++c)
      for (Eigen::Index k = 0; k < ux.cols(); ++k) {
        amp(c, k) = std::hypot(ux(c, k), uy(c, k));
        phase(c, k) = amp(c, k) == 0.0 ? 0.0 : std::atan2(uy(c, k), ux(c, k));
      }
    return ControlSequence(dt, std::move(channels), std::move(amp), std::move(phase));
  }

  double dt() const { return dt_; }
  std::size_t n_steps() const { return static_cast<std::size_t>(amplitudes_.cols()); }
  std::size_t n_channels() const { return channels_.size(); }
  double duration() const { return dt_ * static_cast<double>(n_steps()); }
  const std::vector<ControlChannel>& channels() const { return channels_; }
  const Eigen::MatrixXd& amplitudes() const { return amplitudes_; }
  const Eigen::MatrixXd& phases() const { return phases_; }

  Eigen::MatrixXd ux() const { return amplitudes_.cwiseProduct(phases_.array().cos().matrix()); }
  Eigen::MatrixXd uy() const { return amplitudes_.cwiseProduct(phases_.array().sin().matrix()); }

  /// Steps [first, first + count) as a new sequence.
  ControlSequence slice(std::size_t first, std::size_t count) const {
    if (first + count > n_steps()) throw std::out_of_range("slice beyond sequence end");
    const auto f = static_cast<Eigen::Index>(first);
    const auto c = static_cast<Eigen::Index>(count);
    return ControlSequence(dt_, channels_, amplitudes_.middleCols(f, c), phases_.middleCols(f, c));
  }

  friend bool operator==(const ControlSequence& a, const ControlSequence& b) {
    if (a.dt_ != b.dt_ || a.channels_.size() != b.channels_.size()) return false;
    for (std::size_t i = 0; i < a.channels_.size(); ++i)
      if (a.channels_[i].species != b.channels_[i].species ||
          a.channels_[i].carrier_offset_hz != b.channels_[i].carrier_offset_hz)
        return false;
    return a.amplitudes_ == b.amplitudes_ && a.phases_ == b.phases_;
  }

 private:
  double dt_ = 1.0;
  std::vector<ControlChannel> channels_;
  Eigen::MatrixXd amplitudes_;
  Eigen::MatrixXd phases_;
};

/// Density matrix with trace, Hermiticity and positivity checked on construction.
class DensityState {
 public:
  static constexpr double kTraceTolerance = 1e-10;
  static constexpr double kEigenTolerance = 1e-10;

  explicit DensityState(Operator rho) : rho_(std::move(rho)) {
    spins_for_dimension(rho_.rows());
    if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density matrix must be square");
    if (std::abs(rho_.trace() - Complex{1.0}) > kTraceTolerance)
      throw std::invalid_argument("density matrix trace must be 1");
    if (!is_hermitian(rho_)) throw std::invalid_argument("density matrix must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Operator> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kEigenTolerance)
      throw std::invalid_argument("density matrix must be positive semidefinite");
  }

  const Operator& matrix() const { return rho_; }
  Eigen::Index dim() const { return rho_.rows(); }
  std::size_t n_spins() const { return spins_for_dimension(rho_.rows()); }

 private:
  Operator rho_;
};

/// Eigendecomposition of a Hermitian matrix, the basis for every exponential here.
struct HermitianEigen {
  RealVector values;
  Operator vectors;

  explicit HermitianEigen(const Operator& h) {
    Eigen::SelfAdjointEigenSolver<Operator> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("Hermitian eigensolver failed");
    values = es.eigenvalues();
    vectors = es.eigenvectors();
  }

  Operator exp_minus_i(double dt) const {
    Eigen::VectorXcd phases(values.size());
    for (Eigen::Index k = 0; k < values.size(); ++k) phases(k) = std::exp(-kI * (values(k) * dt));
    return vectors * phases.asDiagonal() * vectors.adjoint();
  }
};

/// U = exp(-i H dt) for Hermitian H.
inline Operator propagator_step(const Operator& h, double dt) {
  if (!is_hermitian(h)) throw std::invalid_argument("propagator_step needs a Hermitian generator");
  return HermitianEigen(h).exp_minus_i(dt);
}

/// Static inhomogeneity applied to a simulation: RF amplitude miscalibration
/// and a uniform field offset shifting every spin's resonance.
struct Inhomogeneity {
  double rf_scale = 1.0;
  double field_offset_hz = 0.0;
};

/// Drift and per-channel control generators in the rotating frame of the
/// control channels. Spins whose species has no channel stay in their
/// species carrier frame.
struct ControlModel {
  Operator drift;
  std::vector<Operator> x_controls;  // (1/2) sum X_i over the channel's spins
  std::vector<Operator> y_controls;
  double rf_scale = 1.0;

  Operator step_hamiltonian(const Eigen::MatrixXd& ux, const Eigen::MatrixXd& uy,
                            Eigen::Index k) const {
    Operator h = drift;
    for (std::size_t c = 0; c < x_controls.size(); ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      if (ux(ci, k) != 0.0) h += (rf_scale * ux(ci, k)) * x_controls[c];
      if (uy(ci, k) != 0.0) h += (rf_scale * uy(ci, k)) * y_controls[c];
    }
    return h;
  }
};

inline ControlModel make_control_model(const SpinSystem& system,
                                       const std::vector<ControlChannel>& channels,
                                       HamiltonianMode mode, const Inhomogeneity& inhom = {}) {
  const std::size_t n = system.size();
  std::vector<double> offsets(n);
  for (std::size_t i = 0; i < n; ++i) offsets[i] = system.spin(i).offset_hz + inhom.field_offset_hz;
  for (const auto& ch : channels) {
    if (!system.has_species(ch.species))
      throw std::invalid_argument("control channel '" + ch.species +
                                  "' names a species absent from the system");
    for (auto i : system.spins_of_species(ch.species)) offsets[i] -= ch.carrier_offset_hz;
  }
  ControlModel model;
  model.drift = build_natural_hamiltonian(system.with_offsets(offsets), mode);
  model.rf_scale = inhom.rf_scale;
  for (const auto& ch : channels) {
    const auto dim = static_cast<Eigen::Index>(system.dimension());
    Operator hx = Operator::Zero(dim, dim);
    Operator hy = Operator::Zero(dim, dim);
    for (auto i : system.spins_of_species(ch.species)) {
      hx += 0.5 * pauli_embed(Axis::X, i, n);
      hy += 0.5 * pauli_embed(Axis::Y, i, n);
    }
    model.x_controls.push_back(std::move(hx));
    model.y_controls.push_back(std::move(hy));
  }
  return model;
}

/// U_sim = U_K ... U_1 with U_k = exp(-i (H_nat + H_rf,k) dt).
inline Operator evolve_controls(const SpinSystem& system, const ControlSequence& controls,
                                HamiltonianMode mode, const Inhomogeneity& inhom = {}) {
  const ControlModel model = make_control_model(system, controls.channels(), mode, inhom);
  const Eigen::MatrixXd ux = controls.ux();
  const Eigen::MatrixXd uy = controls.uy();
  const auto dim = static_cast<Eigen::Index>(system.dimension());
  Operator u = Operator::Identity(dim, dim);
  // Consecutive identical steps share one exponential.
  Eigen::Index k = 0;
  const auto steps = static_cast<Eigen::Index>(controls.n_steps());
  while (k < steps) {
    Eigen::Index run = 1;
    while (k + run < steps && ux.col(k + run) == ux.col(k) && uy.col(k + run) == uy.col(k)) ++run;
    const Operator step = HermitianEigen(model.step_hamiltonian(ux, uy, k))
                              .exp_minus_i(controls.dt() * static_cast<double>(run));
    u = step * u;
    k += run;
  }
  return u;
}

/// exp(-i H_nat tau).
inline Operator free_evolution(const SpinSystem& system, double tau, HamiltonianMode mode) {
  if (!(tau >= 0.0)) throw std::invalid_argument("free evolution time must be non-negative");
  return HermitianEigen(build_natural_hamiltonian(system, mode)).exp_minus_i(tau);
}

/// Time-ordered propagator of H(t) over [t0, t1] using the midpoint rule.
inline Operator evolve_time_dependent(const std::function<Operator(double)>& hamiltonian,
                                      double t0, double t1, std::size_t n_steps) {
  if (n_steps == 0) throw std::invalid_argument("need at least one step");
  const double dt = (t1 - t0) / static_cast<double>(n_steps);
  Operator u;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Operator step = propagator_step(hamiltonian(t0 + (static_cast<double>(k) + 0.5) * dt), dt);
    u = k == 0 ? step : Operator(step * u);
  }
  return u;
}

inline DensityState evolve_state(const DensityState& rho, const Operator& u) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim())
    throw std::invalid_argument("propagator and state dimensions differ");
  return DensityState(u * rho.matrix() * u.adjoint());
}

/// |Tr(U_sim^dagger U_goal)|^2 / d^2; 1 for identical gates up to global phase.
inline double gate_fidelity(const Operator& u_sim, const Operator& u_goal) {
  if (u_sim.rows() != u_goal.rows() || u_sim.cols() != u_goal.cols())
    throw std::invalid_argument("gate dimensions differ");
  const double d = static_cast<double>(u_sim.rows());
  const Complex overlap = (u_sim.adjoint() * u_goal).trace();
  return std::norm(overlap) / (d * d);
}

/// min over pure states of |<psi| U_goal^dagger U_sim |psi>|^2.
///
/// The overlap is a convex combination of the eigenvalues e^{i theta_k}; its
/// smallest modulus is the distance from the origin to their convex hull.
/// All eigenphases inside an arc of width w < pi gives cos^2(w/2); otherwise 0.
inline double worst_case_state_fidelity(const Operator& u_sim, const Operator& u_goal) {
  if (u_sim.rows() != u_goal.rows() || u_sim.cols() != u_goal.cols())
    throw std::invalid_argument("gate dimensions differ");
  const Operator w = u_goal.adjoint() * u_sim;
  Eigen::ComplexEigenSolver<Operator> es(w, false);
  std::vector<double> phases;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    phases.push_back(std::arg(es.eigenvalues()(k)));
  std::sort(phases.begin(), phases.end());
  double largest_gap = kTwoPi - (phases.back() - phases.front());
  for (std::size_t k = 1; k < phases.size(); ++k)
    largest_gap = std::max(largest_gap, phases[k] - phases[k - 1]);
  const double spread = kTwoPi - largest_gap;
  if (spread >= kPi) return 0.0;
  const double c = std::cos(0.5 * spread);
  return c * c;
}

}  // namespace nmrqip
