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

#include "nmrqip/controllability.hpp"
#include "nmrqip/dynamics.hpp"
#include "nmrqip/grape.hpp"
#include "nmrqip/pulse_compiler.hpp"
#include "nmrqip/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmrqip {

using PolarizationVector = std::vector<double>;

/// Product state  (x)_i (I + e_i Z)/2.
inline DensityState thermal_state(const PolarizationVector& pol) {
  if (pol.empty()) throw std::invalid_argument("thermal_state needs at least one spin");
  for (double e : pol)
    if (!(std::abs(e) <= 1.0)) throw std::invalid_argument("polarization must lie in [-1, 1]");
  const std::size_t n = pol.size();
  const std::size_t dim = dimension_for(n);
  Operator rho = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool down = (k >> (n - 1 - i)) & 1U;
      p *= 0.5 * (1.0 + (down ? -pol[i] : pol[i]));
    }
    rho(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = p;
  }
  return DensityState(std::move(rho));
}

/// Tr(rho Z_spin).
inline double measure_polarization(const DensityState& rho, std::size_t spin) {
  const std::size_t n = rho.n_spins();
  if (spin >= n) throw std::out_of_range("spin index out of range");
  return (rho.matrix() * pauli_embed(Axis::Z, spin, n)).trace().real();
}

inline PolarizationVector polarizations(const DensityState& rho) {
  PolarizationVector out(rho.n_spins());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = measure_polarization(rho, i);
  return out;
}

/// Exact SWAP of two spins.
inline Operator swap_gate(std::size_t a, std::size_t b, std::size_t n_spins) {
  if (a >= n_spins || b >= n_spins || a == b) throw std::invalid_argument("invalid SWAP spins");
  return cnot_gate(a, b, n_spins) * cnot_gate(b, a, n_spins) * cnot_gate(a, b, n_spins);
}

/// Toffoli: flips `target` when both controls are |1>.
inline Operator toffoli_gate(std::size_t c1, std::size_t c2, std::size_t target, std::size_t n_spins) {
  if (c1 >= n_spins || c2 >= n_spins || target >= n_spins || c1 == c2 || c1 == target ||
      c2 == target)
    throw std::invalid_argument("invalid Toffoli spins");
  const std::size_t dim = dimension_for(n_spins);
  const auto bit = [n_spins](std::size_t i) { return std::size_t{1} << (n_spins - 1 - i); };
  Operator u = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    const bool fire = (k & bit(c1)) && (k & bit(c2));
    const std::size_t image = fire ? (k ^ bit(target)) : k;
    u(static_cast<Eigen::Index>(image), static_cast<Eigen::Index>(k)) = 1.0;
  }
  return u;
}

// HBAC qubit roles: spin 0 is the refreshed qubit C_m, spin 1 the compression
// target C2, spin 2 the second reset qubit C1.
inline constexpr std::size_t kHbacTarget = 1;

/// Three-bit compression: CNOTNOT (control C2) . TOFFOLI (controls C_m, C1,
/// target C2) . CNOTNOT. Puts the majority of the three bits on C2.
inline Operator compression_gate() {
  const Operator cnotnot = cnot_gate(1, 0, 3) * cnot_gate(1, 2, 3);
  return cnotnot * toffoli_gate(0, 2, 1, 3) * cnotnot;
}

namespace detail {

// Inserts bit `b` at tensor slot `spin` (0 = most significant) of a reduced index.
inline std::size_t insert_bit(std::size_t reduced, std::size_t spin, std::size_t n, std::size_t b) {
  const std::size_t low_bits = n - 1 - spin;
  const std::size_t low = reduced & ((std::size_t{1} << low_bits) - 1);
  const std::size_t high = reduced >> low_bits;
  return (((high << 1) | b) << low_bits) | low;
}

inline Operator partial_trace(const Operator& rho, std::size_t spin, std::size_t n) {
  const std::size_t rdim = dimension_for(n) / 2;
  Operator out = Operator::Zero(static_cast<Eigen::Index>(rdim), static_cast<Eigen::Index>(rdim));
  for (std::size_t a = 0; a < rdim; ++a)
    for (std::size_t b = 0; b < rdim; ++b)
      for (std::size_t s = 0; s < 2; ++s)
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            rho(static_cast<Eigen::Index>(insert_bit(a, spin, n, s)),
                static_cast<Eigen::Index>(insert_bit(b, spin, n, s)));
  return out;
}

// Tr_spin(rho) with `marginal` (2x2) reinserted at the spin's slot.
inline Operator replace_marginal(const Operator& rho, std::size_t spin, std::size_t n,
                                 const Operator& marginal) {
  const Operator reduced = partial_trace(rho, spin, n);
  const std::size_t rdim = dimension_for(n) / 2;
  const auto dim = static_cast<Eigen::Index>(dimension_for(n));
  Operator out = Operator::Zero(dim, dim);
  for (std::size_t a = 0; a < rdim; ++a)
    for (std::size_t b = 0; b < rdim; ++b)
      for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t t = 0; t < 2; ++t)
          out(static_cast<Eigen::Index>(insert_bit(a, spin, n, s)),
              static_cast<Eigen::Index>(insert_bit(b, spin, n, t))) =
              reduced(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) *
              marginal(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
  return out;
}

inline Operator bath_marginal(double polarization) {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = 0.5 * (1.0 + polarization);
  m(1, 1) = 0.5 * (1.0 - polarization);
  return m;
}

}  // namespace detail

/// rho -> Tr_spin(rho) (x) (I + e_b Z)/2 at the spin's slot.
inline DensityState refresh(const DensityState& rho, std::size_t spin, double bath_polarization) {
  const std::size_t n = rho.n_spins();
  if (spin >= n) throw std::out_of_range("spin index out of range");
  if (!(std::abs(bath_polarization) <= 1.0))
    throw std::invalid_argument("bath polarization must lie in [-1, 1]");
  return DensityState(
      detail::replace_marginal(rho.matrix(), spin, n, detail::bath_marginal(bath_polarization)));
}

/// Single-spin depolarizing loss: rho -> (1 - r) rho + r Tr_spin(rho) (x) I/2.
inline DensityState depolarize(const DensityState& rho, std::size_t spin, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("loss rate must lie in [0, 1]");
  const std::size_t n = rho.n_spins();
  if (spin >= n) throw std::out_of_range("spin index out of range");
  return DensityState((1.0 - rate) * rho.matrix() +
                      rate * detail::replace_marginal(rho.matrix(), spin, n, detail::bath_marginal(0.0)));
}

enum class HbacComputeMode { IdealGates, CompiledPulses };

struct HbacConfig {
  double bath_polarization = 1e-5;
  std::size_t n_rounds = 1;
  std::size_t refresh_target = 0;  // C_m; spin 2 is accepted too and swaps roles with C1
  HbacComputeMode compute_mode = HbacComputeMode::IdealGates;
  // Depolarizing loss applied to every spin after each gate in compiled mode.
  double loss_rate = 0.0;
  // Starting polarizations; every spin starts at the bath value when empty.
  PolarizationVector initial_polarization;

  void validate() const {
    if (!(std::abs(bath_polarization) <= 1.0))
      throw std::invalid_argument("bath polarization must lie in [-1, 1]");
    if (n_rounds < 1) throw std::invalid_argument("n_rounds must be at least 1");
    if (refresh_target != 0 && refresh_target != 2)
      throw std::invalid_argument("refresh_target must be an outer spin (0 or 2)");
    if (!(loss_rate >= 0.0 && loss_rate <= 1.0))
      throw std::invalid_argument("loss rate must lie in [0, 1]");
    if (!initial_polarization.empty() && initial_polarization.size() != 3)
      throw std::invalid_argument("initial polarization needs three entries");
  }
};

/// Simulated propagators standing in for the ideal gates in compiled mode.
struct HbacGates {
  Operator swap_m1;  // C_m <-> C1
  Operator swap_m2;  // C_m <-> C2
  Operator compress;
};

struct HbacStep {
  std::size_t round = 0;
  std::size_t step = 0;
  std::string label;
  PolarizationVector polarization;
};

struct HbacTrace {
  std::vector<HbacStep> ideal;
  std::vector<HbacStep> compiled;  // empty in ideal-gates mode

  const std::vector<HbacStep>& primary() const { return compiled.empty() ? ideal : compiled; }
  double final_target() const { return primary().back().polarization[kHbacTarget]; }
};

inline HbacGates ideal_hbac_gates(std::size_t refresh_target = 0) {
  const std::size_t c1 = 2 - refresh_target;
  return {swap_gate(refresh_target, c1, 3), swap_gate(refresh_target, kHbacTarget, 3),
          compression_gate()};
}

namespace detail {

inline std::vector<HbacStep> run_hbac_schedule(const HbacConfig& config, const HbacGates& gates,
                                               double loss_rate) {
  const std::size_t cm = config.refresh_target;
  PolarizationVector start = config.initial_polarization;
  if (start.empty()) start.assign(3, config.bath_polarization);
  DensityState rho = thermal_state(start);
  std::vector<HbacStep> trace;
  std::size_t step = 0;
  std::size_t round = 1;
  const auto record = [&](const std::string& label) {
    trace.push_back({round, ++step, label, polarizations(rho)});
  };
  const auto gate = [&](const Operator& u, const std::string& label) {
    rho = DensityState(u * rho.matrix() * u.adjoint());
    if (loss_rate > 0.0)
      for (std::size_t i = 0; i < 3; ++i) rho = depolarize(rho, i, loss_rate);
    record(label);
  };
  const auto reset = [&] {
    rho = refresh(rho, cm, config.bath_polarization);
    record("refresh");
  };

  reset();
  gate(gates.swap_m1, "swap_m1");
  reset();
  gate(gates.swap_m2, "swap_m2");
  reset();
  gate(gates.compress, "compress");
  for (round = 2; round <= config.n_rounds; ++round) {
    step = 0;
    reset();
    gate(gates.swap_m1, "swap_m1");
    reset();
    gate(gates.compress, "compress");
  }
  return trace;
}

}  // namespace detail

/// Heat-bath algorithmic cooling on three spins.
///
/// Round 1: refresh C_m, SWAP(C_m, C1), refresh, SWAP(C_m, C2), refresh,
/// compress. Later rounds re-cool C1 and C_m through the bath and compress
/// again. Compiled mode runs the same schedule with `gates` (or the ideal
/// gates when none are given) plus the configured loss, and keeps the ideal
/// trace alongside.
inline HbacTrace hbac_run(const SpinSystem& system, const HbacConfig& config,
                          const HbacGates* gates = nullptr) {
  config.validate();
  if (system.size() != 3) throw std::invalid_argument("HBAC needs exactly three spins");
  const HbacGates ideal = ideal_hbac_gates(config.refresh_target);
  HbacTrace out;
  out.ideal = detail::run_hbac_schedule(config, ideal, 0.0);
  if (config.compute_mode == HbacComputeMode::CompiledPulses) {
    if (gates) {
      for (const Operator* u : {&gates->swap_m1, &gates->swap_m2, &gates->compress})
        if (u->rows() != 8 || !is_unitary(*u, 1e-8))
          throw std::invalid_argument("compiled HBAC gates must be 8x8 unitaries");
    }
    out.compiled = detail::run_hbac_schedule(config, gates ? *gates : ideal, config.loss_rate);
  }
  return out;
}

struct CompiledHbacGates {
  HbacGates gates;
  OptimizerResult swap_m1;
  OptimizerResult swap_m2;
  OptimizerResult compress;
};

/// Optimizes each HBAC gate with GRAPE and returns the simulated propagators.
inline CompiledHbacGates compile_hbac_gates(const SpinSystem& system, const OptimizerConfig& config,
                                            std::size_t refresh_target = 0) {
  if (system.size() != 3) throw std::invalid_argument("HBAC needs exactly three spins");
  const HbacGates ideal = ideal_hbac_gates(refresh_target);
  CompiledHbacGates out;
  const auto run = [&](const Operator& goal, std::uint64_t salt) {
    OptimizerConfig c = config;
    c.seed = config.seed + salt;
    return grape_optimize(system, goal, c);
  };
  out.swap_m1 = run(ideal.swap_m1, 0);
  out.swap_m2 = run(ideal.swap_m2, 1);
  out.compress = run(ideal.compress, 2);
  out.gates = {evolve_controls(system, out.swap_m1.controls, config.hamiltonian),
               evolve_controls(system, out.swap_m2.controls, config.hamiltonian),
               evolve_controls(system, out.compress.controls, config.hamiltonian)};
  return out;
}

// ---------------------------------------------------------------------------
// Electron-nuclear hyperfine pair

struct HyperfineParameters {
  double electron_offset_hz = 0.0;  // electron Larmor minus the microwave carrier
  double nuclear_larmor_hz = 0.0;
  double az_hz = 0.0;
  double ax_hz = 0.0;
};

/// Two-spin system: electron "e" (spin 0) and nucleus "n" (spin 1).
inline SpinSystem hyperfine_system(const HyperfineParameters& p) {
  return SpinSystemBuilder()
      .species("e", SpinKind::Electron)
      .species("n", SpinKind::Nuclear)
      .spin("e", "e", p.electron_offset_hz)
      .spin("n", "n", p.nuclear_larmor_hz)
      .hyperfine(0, 1, p.az_hz, p.ax_hz)
      .build();
}

struct HyperfineLevels {
  // Levels 1, 2: electron |0> manifold; 3, 4: electron |1> manifold; each
  // ascending in energy. Energies in rad/s.
  Eigen::Vector4d energies;
  Eigen::Matrix4cd vectors;  // column l is level l+1
};

struct Transition {
  std::size_t lower = 0;  // 1-based level labels
  std::size_t upper = 0;
  double frequency_hz = 0.0;  // (E_lower - E_upper) / 2 pi
  double strength = 0.0;      // |<lower| S_x |upper>|^2
};

namespace detail {

inline void require_hyperfine_pair(const SpinSystem& system) {
  if (system.size() != 2 || system.hyperfine().size() != 1 ||
      system.species_of(0).kind != SpinKind::Electron || system.species_of(1).kind == SpinKind::Electron)
    throw std::invalid_argument("expected an electron (spin 0) hyperfine-coupled to one nucleus");
}

}  // namespace detail

/// Eigenlevels of the hyperfine drift in the electron carrier frame. The
/// electron Z is conserved, so each manifold diagonalizes separately.
inline HyperfineLevels hyperfine_levels(const SpinSystem& system) {
  detail::require_hyperfine_pair(system);
  const Operator h = build_weak_hamiltonian(system);
  HyperfineLevels out;
  out.vectors.setZero();
  for (Eigen::Index m = 0; m < 2; ++m) {
    const HermitianEigen block(h.block(2 * m, 2 * m, 2, 2));
    for (Eigen::Index l = 0; l < 2; ++l) {
      out.energies(2 * m + l) = block.values(l);
      out.vectors.block(2 * m, 2 * m + l, 2, 1) = block.vectors.col(l);
    }
  }
  return out;
}

/// All six level pairs with their frequencies and S_x transition strengths.
inline std::vector<Transition> transition_table(const SpinSystem& system) {
  const HyperfineLevels lv = hyperfine_levels(system);
  const Operator sx = 0.5 * pauli_embed(Axis::X, 0, 2);
  std::vector<Transition> out;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      const Complex m = (lv.vectors.col(ia).adjoint() * sx * lv.vectors.col(ib))(0, 0);
      out.push_back({a + 1, b + 1, (lv.energies(ia) - lv.energies(ib)) / kTwoPi, std::norm(m)});
    }
  return out;
}

/// Microwave carrier offset resonant with the given electron transition.
inline double transition_carrier_hz(const SpinSystem& system, std::size_t lower = 1,
                                    std::size_t upper = 3) {
  if (lower < 1 || lower > 2 || upper < 3 || upper > 4)
    throw std::invalid_argument("electron transitions connect levels {1,2} to {3,4}");
  for (const auto& t : transition_table(system))
    if (t.lower == lower && t.upper == upper) return t.frequency_hz;
  throw std::logic_error("transition missing from table");
}

class UncontrollableSystem : public std::runtime_error {
 public:
  UncontrollableSystem(std::size_t rank, std::size_t full)
      : std::runtime_error("system is not fully controllable: Lie rank " + std::to_string(rank) +
                           " of " + std::to_string(full)),
        rank_(rank),
        full_(full) {}
  std::size_t rank() const { return rank_; }
  std::size_t full_rank() const { return full_; }

 private:
  std::size_t rank_;
  std::size_t full_;
};

/// Lie rank of the drift in the 1-3 microwave frame with the single S_x control.
inline std::size_t single_transition_rank(const SpinSystem& system, HamiltonianMode mode) {
  const ControlChannel channel{system.species_of(0).name, transition_carrier_hz(system)};
  const ControlModel model = make_control_model(system, {channel}, mode);
  return controllability_rank(model.drift, {model.x_controls[0]});
}

/// GRAPE with one microwave channel on the 1-3 transition. Refuses when the
/// drift plus S_x control does not generate su(4).
inline OptimizerResult single_transition_gate(const SpinSystem& system, const Operator& goal,
                                              const OptimizerConfig& config) {
  detail::require_hyperfine_pair(system);
  const std::size_t rank = single_transition_rank(system, config.hamiltonian);
  if (!fully_controllable(rank, 4)) throw UncontrollableSystem(rank, 15);
  OptimizerConfig c = config;
  c.channels = {ControlChannel{system.species_of(0).name, transition_carrier_hz(system)}};
  return grape_optimize(system, goal, c);
}

}  // namespace nmrqip
