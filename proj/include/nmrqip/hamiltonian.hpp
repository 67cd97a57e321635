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

#include "nmrqip/operator.hpp"
#include "nmrqip/spin_system.hpp"

#include <span>
#include <stdexcept>
#include <string>

namespace nmrqip {

namespace detail {

inline Operator zeeman_terms(const SpinSystem& system) {
  const std::size_t n = system.size();
  const auto dim = static_cast<Eigen::Index>(system.dimension());
  Operator h = Operator::Zero(dim, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double nu = system.spin(i).offset_hz;
    if (nu != 0.0) h += 0.5 * kTwoPi * nu * pauli_embed(Axis::Z, i, n);
  }
  return h;
}

// S_z I_z and S_z I_x with S = sigma/2, I = sigma/2.
inline Operator hyperfine_terms(const SpinSystem& system) {
  const std::size_t n = system.size();
  const auto dim = static_cast<Eigen::Index>(system.dimension());
  Operator h = Operator::Zero(dim, dim);
  for (const auto& hf : system.hyperfine()) {
    const Operator sz = 0.5 * pauli_embed(Axis::Z, hf.electron, n);
    const Operator iz = 0.5 * pauli_embed(Axis::Z, hf.nucleus, n);
    const Operator ix = 0.5 * pauli_embed(Axis::X, hf.nucleus, n);
    h += kTwoPi * hf.az_hz * sz * iz + kTwoPi * hf.ax_hz * sz * ix;
  }
  return h;
}

}  // namespace detail

/// Secular Hamiltonian in rad/s:
///   (1/2) sum_i 2 pi nu_i Z_i + (pi/2) sum_{i<j} J_ij Z_i Z_j
/// plus the Z_i Z_j part of any dipolar coupling and the hyperfine terms.
inline Operator build_weak_hamiltonian(const SpinSystem& system) {
  const std::size_t n = system.size();
  Operator h = detail::zeeman_terms(system);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double zz = 0.5 * kPi * system.j(i, j) + kPi * system.dipolar(i, j);
      if (zz != 0.0) h += zz * zz_embed(i, j, n);
    }
  h += detail::hyperfine_terms(system);
  return h;
}

/// Full coupling Hamiltonian: isotropic J exchange and secular dipolar
/// (pi/2) d (2 ZZ - XX - YY) between like spins, plus Zeeman and hyperfine terms.
inline Operator build_full_hamiltonian(const SpinSystem& system) {
  const std::size_t n = system.size();
  Operator h = detail::zeeman_terms(system);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double jij = system.j(i, j);
      const double dij = system.dipolar(i, j);
      if (jij == 0.0 && dij == 0.0) continue;
      const Operator zz = zz_embed(i, j, n);
      // Offsets live in per-species rotating frames, where heteronuclear
      // flip-flop terms oscillate at the carrier difference and average out.
      if (system.spin(i).species != system.spin(j).species) {
        h += (0.5 * kPi * jij + kPi * dij) * zz;
        continue;
      }
      const Operator xx = pauli_embed(Axis::X, i, n) * pauli_embed(Axis::X, j, n);
      const Operator yy = pauli_embed(Axis::Y, i, n) * pauli_embed(Axis::Y, j, n);
      h += 0.5 * kPi * jij * (xx + yy + zz);
      h += 0.5 * kPi * dij * (2.0 * zz - xx - yy);
    }
  h += detail::hyperfine_terms(system);
  return h;
}

inline Operator build_natural_hamiltonian(const SpinSystem& system, HamiltonianMode mode) {
  return mode == HamiltonianMode::Weak ? build_weak_hamiltonian(system)
                                       : build_full_hamiltonian(system);
}

/// Lab-frame RF drive on every spin of `channel`:
///   (w_nut/2)(cos(w_rf t + phase) X + sin(w_rf t + phase) Y).
inline Operator build_rf_hamiltonian(const SpinSystem& system, const std::string& channel,
                                     double amplitude, double phase, double frequency,
                                     double t) {
  if (!system.has_species(channel))
    throw std::invalid_argument("unknown RF channel '" + channel + "'");
  if (amplitude < 0.0) throw std::invalid_argument("RF amplitude must be non-negative");
  const std::size_t n = system.size();
  const auto dim = static_cast<Eigen::Index>(system.dimension());
  Operator h = Operator::Zero(dim, dim);
  if (amplitude == 0.0) return h;
  const double c = std::cos(frequency * t + phase);
  const double s = std::sin(frequency * t + phase);
  for (auto i : system.spins_of_species(channel))
    h += 0.5 * amplitude * (c * pauli_embed(Axis::X, i, n) + s * pauli_embed(Axis::Y, i, n));
  return h;
}

/// H_r = Rz(-w t) H_lab Rz(w t) - sum_k (w_k/2) Z_k, one frame frequency per spin (rad/s).
inline Operator rotating_frame_hamiltonian(const Operator& h_lab,
                                           std::span<const double> frame_frequencies,
                                           double t) {
  const std::size_t n = spins_for_dimension(h_lab.rows());
  if (frame_frequencies.size() != n)
    throw std::invalid_argument("need one frame frequency per spin");
  std::vector<double> angles(n);
  for (std::size_t k = 0; k < n; ++k) angles[k] = frame_frequencies[k] * t;
  const Operator w = rz_all(angles, n);
  Operator h = w.adjoint() * h_lab * w;
  for (std::size_t k = 0; k < n; ++k)
    if (frame_frequencies[k] != 0.0) h -= 0.5 * frame_frequencies[k] * pauli_embed(Axis::Z, k, n);
  return h;
}

/// Electron-nuclear pair H = w_e S_z + w_n I_z + A_z S_z I_z + A_x S_z I_x (rad/s),
/// electron on spin 0, S = sigma/2 and I = sigma/2.
inline Operator build_hyperfine_hamiltonian(double omega_e, double omega_n, double a_z,
                                            double a_x) {
  const Operator sz = 0.5 * pauli_embed(Axis::Z, 0, 2);
  const Operator iz = 0.5 * pauli_embed(Axis::Z, 1, 2);
  const Operator ix = 0.5 * pauli_embed(Axis::X, 1, 2);
  return omega_e * sz + omega_n * iz + a_z * sz * iz + a_x * sz * ix;
}

}  // namespace nmrqip
