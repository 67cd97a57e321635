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
#include "nmrqip/hamiltonian.hpp"
#include "nmrqip/operator.hpp"
#include "nmrqip/spin_system.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nmrqip {

struct Delay {
  double duration = 0.0;
};

/// Rectangular pulse of `angle` on each listed spin about the xy axis at the
/// matching entry of `phases`. The transmitter sits on each addressed spin's
/// resonance; zero duration means an ideal instantaneous rotation.
struct HardPulse {
  std::vector<std::size_t> spins;
  std::vector<double> phases;
  double angle = 0.0;
  double duration = 0.0;

  static HardPulse on(std::vector<std::size_t> spins, double phase, double angle,
                      double duration = 0.0) {
    std::vector<double> phases(spins.size(), phase);
    return HardPulse{std::move(spins), std::move(phases), angle, duration};
  }
};

/// Amplitude-modulated pulse on every spin of `channel`. Envelope samples are
/// nutation frequencies (rad/s), each held for `sample_dt`.
struct ShapedPulse {
  std::string channel;
  std::vector<double> envelope;
  double sample_dt = 0.0;
  double carrier_offset_hz = 0.0;
  double phase = 0.0;

  double duration() const { return sample_dt * static_cast<double>(envelope.size()); }
  double flip_angle() const {
    double a = 0.0;
    for (double s : envelope) a += s * sample_dt;
    return a;
  }
};

/// Frame change: exp(-i angle/2 Z) on one spin, taking no time.
struct VirtualZ {
  std::size_t spin = 0;
  double angle = 0.0;
};

using PulseEvent = std::variant<Delay, HardPulse, ShapedPulse, VirtualZ>;

/// Ordered pulse program plus the z-rotation left in each spin's frame at the end.
struct PulseSequence {
  std::size_t n_spins = 0;
  std::vector<PulseEvent> events;
  std::vector<double> frame_record;

  explicit PulseSequence(std::size_t n = 0) : n_spins(n), frame_record(n, 0.0) {}

  PulseSequence& add(PulseEvent e) {
    events.push_back(std::move(e));
    return *this;
  }

  double duration() const {
    double t = 0.0;
    for (const auto& e : events) {
      if (const auto* d = std::get_if<Delay>(&e)) t += d->duration;
      if (const auto* p = std::get_if<HardPulse>(&e)) t += p->duration;
      if (const auto* s = std::get_if<ShapedPulse>(&e)) t += s->duration();
    }
    return t;
  }

  std::size_t count_virtual_z() const {
    std::size_t n = 0;
    for (const auto& e : events) n += std::holds_alternative<VirtualZ>(e) ? 1 : 0;
    return n;
  }

  void validate() const {
    if (frame_record.size() != n_spins) throw std::invalid_argument("frame record length mismatch");
    for (double f : frame_record)
      if (!std::isfinite(f)) throw std::invalid_argument("non-finite frame angle");
    for (const auto& e : events) {
      if (const auto* d = std::get_if<Delay>(&e)) {
        if (!(d->duration >= 0.0) || !std::isfinite(d->duration))
          throw std::invalid_argument("delay must be non-negative");
      } else if (const auto* p = std::get_if<HardPulse>(&e)) {
        if (p->spins.empty() || p->spins.size() != p->phases.size())
          throw std::invalid_argument("hard pulse needs one phase per addressed spin");
        for (auto s : p->spins)
          if (s >= n_spins) throw std::invalid_argument("hard pulse addresses a missing spin");
        if (!(p->duration >= 0.0) || !std::isfinite(p->angle) || !std::isfinite(p->duration))
          throw std::invalid_argument("hard pulse angle/duration invalid");
        for (double ph : p->phases)
          if (!std::isfinite(ph)) throw std::invalid_argument("hard pulse phase must be finite");
      } else if (const auto* s = std::get_if<ShapedPulse>(&e)) {
        if (!(s->sample_dt > 0.0) || s->envelope.empty())
          throw std::invalid_argument("shaped pulse needs samples and a positive sample time");
        for (double a : s->envelope)
          if (!(a >= 0.0) || !std::isfinite(a))
            throw std::invalid_argument("shaped pulse envelope must be non-negative");
      } else if (const auto* z = std::get_if<VirtualZ>(&e)) {
        if (z->spin >= n_spins || !std::isfinite(z->angle))
          throw std::invalid_argument("invalid virtual z-rotation");
      }
    }
  }
};

namespace detail {

inline void require_register(const PulseSequence& seq, const SpinSystem& system) {
  if (seq.n_spins != system.size())
    throw std::invalid_argument("pulse sequence and spin system sizes differ");
  seq.validate();
}

}  // namespace detail

/// Propagator of one hard pulse in the species-carrier frame.
///
/// Each addressed spin i is driven on resonance. In a frame co-rotating with
/// those spins the drive is static, so U = Rz_i(2 pi nu_i t_p) exp(-i H' t_p)
/// with H' = H_nat - pi nu_i Z_i + H_rf. Only valid for the secular
/// Hamiltonian, which commutes with the frame rotation.
inline Operator hard_pulse_propagator(const HardPulse& pulse, const SpinSystem& system,
                                      HamiltonianMode mode = HamiltonianMode::Weak) {
  const std::size_t n = system.size();
  if (pulse.duration == 0.0) {
    const auto dim = static_cast<Eigen::Index>(system.dimension());
    Operator u = Operator::Identity(dim, dim);
    for (std::size_t k = 0; k < pulse.spins.size(); ++k)
      u = rxy(pulse.angle, pulse.phases[k], pulse.spins[k], n) * u;
    return u;
  }
  if (mode != HamiltonianMode::Weak)
    throw std::invalid_argument("finite-duration hard pulses are simulated with the weak Hamiltonian");
  const double w = pulse.angle / pulse.duration;
  Operator h = build_weak_hamiltonian(system);
  std::vector<double> frame(n, 0.0);
  for (std::size_t k = 0; k < pulse.spins.size(); ++k) {
    const std::size_t i = pulse.spins[k];
    const double nu = system.spin(i).offset_hz;
    h -= kPi * nu * pauli_embed(Axis::Z, i, n);
    frame[i] = kTwoPi * nu * pulse.duration;
    h += 0.5 * w * (std::cos(pulse.phases[k]) * pauli_embed(Axis::X, i, n) +
                    std::sin(pulse.phases[k]) * pauli_embed(Axis::Y, i, n));
  }
  return rz_all(frame, n) * HermitianEigen(h).exp_minus_i(pulse.duration);
}

/// Propagator of a shaped pulse, stepped sample by sample in the frame of the
/// transmitter and returned in the species-carrier frame.
inline Operator shaped_pulse_propagator(const ShapedPulse& pulse, const SpinSystem& system,
                                        HamiltonianMode mode = HamiltonianMode::Weak) {
  if (!system.has_species(pulse.channel))
    throw std::invalid_argument("shaped pulse channel '" + pulse.channel + "' not in system");
  const std::size_t n = system.size();
  const ControlChannel channel{pulse.channel, pulse.carrier_offset_hz};
  const ControlModel model = make_control_model(system, {channel}, mode);
  const auto dim = static_cast<Eigen::Index>(system.dimension());
  Operator u = Operator::Identity(dim, dim);
  const double c = std::cos(pulse.phase), s = std::sin(pulse.phase);
  for (double a : pulse.envelope) {
    const Operator h = model.drift + (a * c) * model.x_controls[0] + (a * s) * model.y_controls[0];
    u = HermitianEigen(h).exp_minus_i(pulse.sample_dt) * u;
  }
  std::vector<double> frame(n, 0.0);
  for (auto i : system.spins_of_species(pulse.channel))
    frame[i] = kTwoPi * pulse.carrier_offset_hz * pulse.duration();
  return rz_all(frame, n) * u;
}

inline Operator event_propagator(const PulseEvent& event, const SpinSystem& system,
                                 HamiltonianMode mode = HamiltonianMode::Weak) {
  const std::size_t n = system.size();
  return std::visit(
      [&](const auto& e) -> Operator {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Delay>) {
          return free_evolution(system, e.duration, mode);
        } else if constexpr (std::is_same_v<T, HardPulse>) {
          return hard_pulse_propagator(e, system, mode);
        } else if constexpr (std::is_same_v<T, ShapedPulse>) {
          return shaped_pulse_propagator(e, system, mode);
        } else {
          return rz(e.angle, e.spin, n);
        }
      },
      event);
}

/// Product of the event propagators, without the terminal frame record.
inline Operator events_propagator(const PulseSequence& seq, const SpinSystem& system,
                                  HamiltonianMode mode = HamiltonianMode::Weak) {
  detail::require_register(seq, system);
  const auto dim = static_cast<Eigen::Index>(system.dimension());
  Operator u = Operator::Identity(dim, dim);
  for (const auto& e : seq.events) u = event_propagator(e, system, mode) * u;
  return u;
}

/// Full propagator: events followed by the recorded frame z-rotations.
inline Operator sequence_propagator(const PulseSequence& seq, const SpinSystem& system,
                                    HamiltonianMode mode = HamiltonianMode::Weak) {
  return rz_all(seq.frame_record, system.size()) * events_propagator(seq, system, mode);
}

/// Same sequence with every pulse made instantaneous; the reference a compiled
/// sequence is meant to implement.
inline PulseSequence idealized(const PulseSequence& seq) {
  PulseSequence out = seq;
  for (auto& e : out.events)
    if (auto* p = std::get_if<HardPulse>(&e)) p->duration = 0.0;
  return out;
}

}  // namespace nmrqip
