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
#include "nmrqip/pulse_sequence.hpp"
#include "nmrqip/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nmrqip {

// A compiled sequence must reproduce its target to this gate fidelity.
inline constexpr double kCertificateTolerance = 1e-9;

struct CompileOptions {
  // Duration given to every hard pulse; 0 compiles instantaneous rotations.
  double pulse_duration = 0.0;
  bool track_phases = true;
};

/// A pulse program together with the gate it implements and the fidelity of
/// its ideal propagator against that gate.
struct CompiledSequence {
  PulseSequence sequence;
  Operator target;
  double certificate = 0.0;
};

/// Commutes every VirtualZ to the end of the sequence.
///
/// R_phi(a) Rz(theta) = Rz(theta) R_{phi - theta}(a): a pending frame angle on
/// a spin shifts the phase of each later pulse on that spin by -theta. Delays
/// commute with z-rotations under the secular Hamiltonian. The accumulated
/// angles land in frame_record. Phases of shifted pulses are reduced to (-pi, pi].
inline PulseSequence phase_track(const PulseSequence& seq) {
  seq.validate();
  PulseSequence out(seq.n_spins);
  out.frame_record = seq.frame_record;
  std::vector<double> pending(seq.n_spins, 0.0);
  for (const auto& e : seq.events) {
    if (const auto* z = std::get_if<VirtualZ>(&e)) {
      pending[z->spin] += z->angle;
    } else if (const auto* p = std::get_if<HardPulse>(&e)) {
      HardPulse shifted = *p;
      for (std::size_t k = 0; k < shifted.spins.size(); ++k)
        shifted.phases[k] = std::remainder(shifted.phases[k] - pending[shifted.spins[k]], kTwoPi);
      out.events.emplace_back(std::move(shifted));
    } else if (std::holds_alternative<ShapedPulse>(e)) {
      // One transmitter drives a whole species, so per-spin frames cannot be
      // folded into its phase without knowing the species layout.
      if (std::any_of(pending.begin(), pending.end(), [](double a) { return a != 0.0; }))
        throw std::invalid_argument("cannot commute a virtual z-rotation past a shaped pulse");
      out.events.push_back(e);
    } else {
      out.events.push_back(e);
    }
  }
  // Angles are reduced mod 2 pi, which changes the propagator by a global sign at most.
  for (std::size_t i = 0; i < seq.n_spins; ++i)
    out.frame_record[i] = std::remainder(out.frame_record[i] + pending[i], kTwoPi);
  return out;
}

/// CNOT on an n-spin register (spin 0 most significant).
inline Operator cnot_gate(std::size_t control, std::size_t target, std::size_t n_spins) {
  const std::size_t dim = dimension_for(n_spins);
  if (control >= n_spins || target >= n_spins || control == target)
    throw std::invalid_argument("invalid CNOT control/target");
  const std::size_t cbit = std::size_t{1} << (n_spins - 1 - control);
  const std::size_t tbit = std::size_t{1} << (n_spins - 1 - target);
  Operator u = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    const std::size_t image = (k & cbit) ? (k ^ tbit) : k;
    u(static_cast<Eigen::Index>(image), static_cast<Eigen::Index>(k)) = 1.0;
  }
  return u;
}

namespace detail {

// Sylvester-ordered Hadamard sign, row r column c of a 2^k matrix.
inline int hadamard_sign(std::size_t row, std::size_t col) {
  return (__builtin_popcountll(row & col) % 2) ? -1 : 1;
}

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace detail

/// Decoupling schedule over a period tau that leaves only the coupling of the
/// active pair: exp(-i (pi tau/2) J_ij Z_i Z_j).
///
/// Every other spin is assigned a distinct non-constant row of a Sylvester
/// Hadamard matrix; the period is split into as many equal segments as the
/// matrix has columns and the spin carries a pi pulse wherever its sign
/// changes. Rows are balanced and mutually orthogonal, so every coupling
/// except the active one averages to zero. Zeeman evolution of the active
/// spins is returned as an inverse rotation in frame_record. With no active
/// pair spin 0 keeps the constant row and everything is decoupled.
inline PulseSequence refocus_schedule(const SpinSystem& system,
                                      std::optional<std::pair<std::size_t, std::size_t>> active,
                                      double tau, const CompileOptions& options = {}) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("refocusing period must be positive");
  const std::size_t n = system.size();
  std::vector<std::size_t> row(n, 0);
  std::vector<std::size_t> others;
  if (active) {
    const auto [a, b] = *active;
    if (a >= n || b >= n || a == b) throw std::invalid_argument("invalid active pair");
    for (std::size_t k = 0; k < n; ++k)
      if (k != a && k != b) others.push_back(k);
  } else {
    for (std::size_t k = 1; k < n; ++k) others.push_back(k);
  }
  const std::size_t segments = detail::next_power_of_two(others.size() + 1);
  for (std::size_t r = 0; r < others.size(); ++r) row[others[r]] = r + 1;

  auto sign = [&](std::size_t spin, std::size_t segment) {
    return detail::hadamard_sign(row[spin], segment);
  };

  PulseSequence seq(n);
  std::vector<std::size_t> flips(n, 0);
  auto emit_flips = [&](const std::vector<std::size_t>& spins) {
    if (spins.empty()) return;
    HardPulse p;
    p.angle = kPi;
    p.duration = options.pulse_duration;
    for (auto s : spins) {
      p.spins.push_back(s);
      // Alternate x and -x so each pair of flips multiplies to the identity.
      p.phases.push_back(flips[s] % 2 ? kPi : 0.0);
      ++flips[s];
    }
    seq.add(std::move(p));
  };

  const double segment_time = tau / static_cast<double>(segments);
  std::vector<int> current(n, 1);
  for (std::size_t s = 0; s < segments; ++s) {
    std::vector<std::size_t> to_flip;
    for (std::size_t k = 0; k < n; ++k)
      if (sign(k, s) != current[k]) {
        to_flip.push_back(k);
        current[k] = sign(k, s);
      }
    emit_flips(to_flip);
    seq.add(Delay{segment_time});
  }
  std::vector<std::size_t> restore;
  for (std::size_t k = 0; k < n; ++k)
    if (current[k] != 1) restore.push_back(k);
  emit_flips(restore);

  for (std::size_t k = 0; k < n; ++k) {
    int net = 0;
    for (std::size_t s = 0; s < segments; ++s) net += sign(k, s);
    seq.frame_record[k] = -kTwoPi * system.spin(k).offset_hz * segment_time * net;
  }
  return seq;
}

/// Ideal-propagator fidelity of a sequence against a target gate.
inline double certify(const PulseSequence& seq, const SpinSystem& system, const Operator& target) {
  return gate_fidelity(sequence_propagator(idealized(seq), system, HamiltonianMode::Weak), target);
}

/// CNOT from a coupling evolution of 1/(2J) sandwiched between pi/2 pulses on
/// the target: CNOT = Ry_t(pi/2) . CZ . Ry_t(-pi/2), with CZ obtained from the
/// coupling evolution and z-rotations of both spins. Zeeman evolution during
/// the delay is undone with virtual z-rotations; other spins are decoupled by
/// refocus_schedule. The result is verified against the exact CNOT.
inline CompiledSequence compile_cnot(const SpinSystem& system, std::size_t control,
                                     std::size_t target, const CompileOptions& options = {}) {
  const std::size_t n = system.size();
  if (control >= n || target >= n || control == target)
    throw std::invalid_argument("invalid CNOT control/target");
  const double j = system.j(control, target);
  if (j == 0.0) throw std::invalid_argument("CNOT needs a nonzero J coupling between the spins");
  if (!system.weak_coupling_valid(control, target))
    throw std::invalid_argument(
        "pair is strongly coupled; the delay-based CNOT needs the weak-coupling regime");
  const double tau = 1.0 / (2.0 * std::abs(j));
  const double sign = j > 0 ? 1.0 : -1.0;

  PulseSequence seq(n);
  seq.add(HardPulse::on({target}, 1.5 * kPi, kPi / 2, options.pulse_duration));
  if (n == 2) {
    seq.add(Delay{tau});
    for (std::size_t k = 0; k < n; ++k)
      seq.frame_record[k] = -kTwoPi * system.spin(k).offset_hz * tau;
  } else {
    const PulseSequence block = refocus_schedule(system, std::make_pair(control, target), tau, options);
    for (const auto& e : block.events) seq.add(e);
    seq.frame_record = block.frame_record;
  }
  // Frame corrections become explicit virtual rotations here so phase tracking
  // carries them through the final pulse.
  std::vector<double> frame = seq.frame_record;
  std::fill(seq.frame_record.begin(), seq.frame_record.end(), 0.0);
  frame[control] += -sign * kPi / 2;
  frame[target] += -sign * kPi / 2;
  for (std::size_t k = 0; k < n; ++k)
    if (frame[k] != 0.0) seq.add(VirtualZ{k, frame[k]});
  seq.add(HardPulse::on({target}, 0.5 * kPi, kPi / 2, options.pulse_duration));
  if (options.track_phases) seq = phase_track(seq);

  CompiledSequence out{std::move(seq), cnot_gate(control, target, n), 0.0};
  out.certificate = certify(out.sequence, system, out.target);
  if (out.certificate < 1.0 - kCertificateTolerance)
    throw std::logic_error("compiled CNOT failed verification (fidelity " +
                           std::to_string(out.certificate) + ")");
  return out;
}

/// Truncated Gaussian (+-3 sigma, sigma = duration/6) sampled at midpoints and
/// scaled so the on-resonance flip angle equals `angle`.
inline ShapedPulse gaussian_pulse(const std::string& channel, double center_offset_hz, double angle,
                                  double duration, std::size_t n_samples, double phase = 0.0) {
  if (!(duration > 0.0)) throw std::invalid_argument("Gaussian pulse duration must be positive");
  if (n_samples < 8) throw std::invalid_argument("Gaussian pulse needs at least 8 samples");
  if (!std::isfinite(angle)) throw std::invalid_argument("Gaussian pulse angle must be finite");
  ShapedPulse p;
  p.channel = channel;
  p.carrier_offset_hz = center_offset_hz;
  p.sample_dt = duration / static_cast<double>(n_samples);
  // Negative angles are a pi phase shift.
  p.phase = angle < 0 ? phase + kPi : phase;
  const double sigma = duration / 6.0;
  double area = 0.0;
  p.envelope.resize(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * p.sample_dt - 0.5 * duration;
    p.envelope[k] = std::exp(-t * t / (2.0 * sigma * sigma));
    area += p.envelope[k] * p.sample_dt;
  }
  for (double& a : p.envelope) a *= std::abs(angle) / area;
  return p;
}

/// Probability that a lone spin at each detuning (Hz, relative to the pulse
/// carrier) ends in |1> after starting in |0>.
inline std::vector<double> excitation_profile(const ShapedPulse& pulse,
                                              std::span<const double> detunings_hz) {
  std::vector<double> out;
  out.reserve(detunings_hz.size());
  for (double d : detunings_hz) {
    const auto sys = SpinSystemBuilder().spin("probe", pulse.channel, pulse.carrier_offset_hz + d).build();
    const Operator u = shaped_pulse_propagator(pulse, sys);
    out.push_back(std::norm(u(1, 0)));
  }
  return out;
}

}  // namespace nmrqip
