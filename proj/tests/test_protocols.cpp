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

#include "nmrqip/protocols.hpp"

#include <gtest/gtest.h>

#include <array>
#include <random>

using namespace nmrqip;

namespace {

// Classical population bookkeeping on three bits; bit of spin i is
// (k >> (2 - i)) & 1.
using Populations = std::array<double, 8>;

int bit(int k, int spin) { return (k >> (2 - spin)) & 1; }
int flip(int k, int spin) { return k ^ (1 << (2 - spin)); }

Populations product_populations(const std::array<double, 3>& eps) {
  Populations p{};
  for (int k = 0; k < 8; ++k) {
    p[k] = 1.0;
    for (int i = 0; i < 3; ++i) p[k] *= bit(k, i) ? (1.0 - eps[i]) / 2.0 : (1.0 + eps[i]) / 2.0;
  }
  return p;
}

double pol(const Populations& p, int spin) {
  double s = 0.0;
  for (int k = 0; k < 8; ++k) s += bit(k, spin) ? -p[k] : p[k];
  return s;
}

// Compression on bits: CNOT from C2 to both others, Toffoli onto C2, CNOT again.
int compress_bits(int k) {
  const auto cnotnot = [](int x) { return bit(x, 1) ? flip(flip(x, 0), 2) : x; };
  k = cnotnot(k);
  if (bit(k, 0) && bit(k, 2)) k = flip(k, 1);
  return cnotnot(k);
}

int swap_bits(int k, int a, int b) {
  return bit(k, a) == bit(k, b) ? k : flip(flip(k, a), b);
}

template <class F>
Populations permute(const Populations& p, F image) {
  Populations out{};
  for (int k = 0; k < 8; ++k) out[image(k)] += p[k];
  return out;
}

Populations reset(const Populations& p, int spin, double eps) {
  Populations out{};
  for (int k = 0; k < 8; ++k) {
    const double marginal = p[k] + p[flip(k, spin)];
    out[k] = marginal * (bit(k, spin) ? (1.0 - eps) / 2.0 : (1.0 + eps) / 2.0);
  }
  return out;
}

Populations lose(const Populations& p, double r) {
  Populations q = p;
  for (int i = 0; i < 3; ++i) {
    Populations next{};
    for (int k = 0; k < 8; ++k) next[k] = (1.0 - r) * q[k] + r * 0.5 * (q[k] + q[flip(k, i)]);
    q = next;
  }
  return q;
}

// First HBAC round with C_m = 0, C2 = 1, C1 = 2 and loss r after every gate.
Populations oracle_round(double eps_b, double r) {
  Populations p = product_populations({eps_b, eps_b, eps_b});
  p = reset(p, 0, eps_b);
  p = lose(permute(p, [](int k) { return swap_bits(k, 0, 2); }), r);
  p = reset(p, 0, eps_b);
  p = lose(permute(p, [](int k) { return swap_bits(k, 0, 1); }), r);
  p = reset(p, 0, eps_b);
  return lose(permute(p, compress_bits), r);
}

SpinSystem three_carbons() {
  return SpinSystemBuilder()
      .spin("Cm", "C", -2000.0)
      .spin("C2", "C", 0.0)
      .spin("C1", "C", 2500.0)
      .j(0, 1, 55.0)
      .j(1, 2, 55.0)
      .dipolar(0, 1, 800.0)
      .dipolar(1, 2, 600.0)
      .build();
}

DensityState random_state(std::size_t n, std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(dimension_for(n));
  std::normal_distribution<double> g;
  Operator a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = Complex(g(rng), g(rng));
  Operator rho = a * a.adjoint();
  return DensityState(rho / rho.trace());
}

}  // namespace

TEST(ThermalState, ProductFormula) {
  const DensityState rho = thermal_state({0.1, 0.1, 0.1});
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.166375, 1e-15);
  EXPECT_NEAR(rho.matrix().trace().real(), 1.0, 1e-15);
  EXPECT_TRUE(rho.matrix().isApprox(rho.matrix().diagonal().asDiagonal().toDenseMatrix()));
  const DensityState mixed = thermal_state({0.0, 0.0, 0.0});
  EXPECT_TRUE(mixed.matrix().isApprox(Operator::Identity(8, 8) / 8.0));
  const DensityState pure = thermal_state({1.0});
  EXPECT_DOUBLE_EQ(pure.matrix()(0, 0).real(), 1.0);
  EXPECT_DOUBLE_EQ(pure.matrix()(1, 1).real(), 0.0);
}

TEST(ThermalState, RejectsOutOfRange) {
  EXPECT_THROW(thermal_state({1.2}), std::invalid_argument);
  EXPECT_THROW(thermal_state({0.1, -1.01}), std::invalid_argument);
  EXPECT_THROW(thermal_state({}), std::invalid_argument);
}

TEST(MeasurePolarization, InvertsThermalState) {
  const PolarizationVector eps{0.3, -0.25, 0.7};
  const DensityState rho = thermal_state(eps);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(measure_polarization(rho, i), eps[i], 1e-15);
  EXPECT_DOUBLE_EQ(measure_polarization(thermal_state({-1.0}), 0), -1.0);
  EXPECT_THROW(measure_polarization(rho, 3), std::out_of_range);
}

TEST(MeasurePolarization, CnotOnThermalPairGivesProduct) {
  const double e = 0.37;
  const DensityState rho = thermal_state({e, e});
  const Operator u = cnot_gate(0, 1, 2);
  const DensityState out(u * rho.matrix() * u.adjoint());
  // Target bit after CNOT is c xor t.
  double oracle = 0.0;
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < 2; ++t) {
      const double p = (c ? 1 - e : 1 + e) / 2 * (t ? 1 - e : 1 + e) / 2;
      oracle += (c ^ t) ? -p : p;
    }
  EXPECT_NEAR(measure_polarization(out, 1), oracle, 1e-15);
  EXPECT_NEAR(oracle, e * e, 1e-15);
}

TEST(CompressionGate, IsPermutationMatchingBitOracle) {
  const Operator u = compression_gate();
  ASSERT_EQ(u.rows(), 8);
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(u.col(k).cwiseAbs().sum(), 1.0);
    EXPECT_EQ(u.row(k).cwiseAbs().sum(), 1.0);
    EXPECT_EQ(u(compress_bits(k), k), Complex(1.0));
    // Target ends up holding the majority of the three input bits.
    EXPECT_EQ(bit(compress_bits(k), 1), bit(k, 0) + bit(k, 1) + bit(k, 2) >= 2 ? 1 : 0);
  }
}

TEST(CompressionGate, UniformThermalInputMatchesOracle) {
  for (double e : {1e-5, 0.01, 0.2, 0.5, 0.9, 1.0, -0.3}) {
    const DensityState rho = thermal_state({e, e, e});
    const Operator u = compression_gate();
    const DensityState out(u * rho.matrix() * u.adjoint());
    const Populations p = permute(product_populations({e, e, e}), compress_bits);
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(out.matrix()(k, k).real(), p[k], 1e-12);
    EXPECT_NEAR(measure_polarization(out, 1), (3 * e - e * e * e) / 2, 1e-12);
  }
}

TEST(CompressionGate, NonUniformInputsAgreeWithOracleAndBound) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::array<double, 3> e{u(rng), u(rng), u(rng)};
    const Operator g = compression_gate();
    const DensityState rho = thermal_state({e[0], e[1], e[2]});
    const DensityState out(g * rho.matrix() * g.adjoint());
    const double oracle = pol(permute(product_populations(e), compress_bits), 1);
    EXPECT_NEAR(measure_polarization(out, 1), oracle, 1e-12);
    // Uniform input at the same magnitude is the single-compression ceiling.
    const double m = std::max({std::abs(e[0]), std::abs(e[1]), std::abs(e[2])});
    EXPECT_LE(std::abs(oracle), (3 * m - m * m * m) / 2 + 1e-12);
  }
}

TEST(Refresh, SetsBathPolarizationAndIsIdempotent) {
  const DensityState rho = thermal_state({0.2, -0.4, 0.6});
  const DensityState once = refresh(rho, 1, 0.05);
  EXPECT_DOUBLE_EQ(measure_polarization(once, 1), 0.05);
  const DensityState twice = refresh(once, 1, 0.05);
  EXPECT_LT((twice.matrix() - once.matrix()).norm(), 1e-15);
  EXPECT_NEAR(measure_polarization(once, 0), 0.2, 1e-15);
  EXPECT_NEAR(measure_polarization(once, 2), 0.6, 1e-15);
  EXPECT_THROW(refresh(rho, 3, 0.1), std::out_of_range);
  EXPECT_THROW(refresh(rho, 0, 1.5), std::invalid_argument);
}

TEST(Refresh, PreservesTracePositivityAndOtherMarginals) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityState rho = random_state(3, rng);
    const std::size_t spin = static_cast<std::size_t>(trial % 3);
    // DensityState construction enforces trace one and positivity.
    const DensityState out = refresh(rho, spin, 0.3);
    for (std::size_t other = 0; other < 3; ++other) {
      if (other == spin) continue;
      // Compare the two-spin marginal over the untouched spins.
      const std::size_t gone = spin;
      const Operator before = detail::partial_trace(rho.matrix(), gone, 3);
      const Operator after = detail::partial_trace(out.matrix(), gone, 3);
      EXPECT_LT((before - after).norm(), 1e-14);
    }
    // Refreshed spin is uncorrelated with the rest.
    const Operator reduced = detail::partial_trace(rho.matrix(), spin, 3);
    Operator expect = Operator::Zero(8, 8);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int s = 0; s < 2; ++s)
          expect(static_cast<Eigen::Index>(detail::insert_bit(a, spin, 3, s)),
                 static_cast<Eigen::Index>(detail::insert_bit(b, spin, 3, s))) =
              reduced(a, b) * (s ? 0.35 : 0.65);
    EXPECT_LT((out.matrix() - expect).norm(), 1e-14);
  }
}

TEST(Refresh, DiagonalStatesMatchPopulationOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Populations p{};
    double total = 0.0;
    for (auto& x : p) total += (x = u(rng));
    Operator rho = Operator::Zero(8, 8);
    for (int k = 0; k < 8; ++k) rho(k, k) = p[k] /= total;
    const int spin = trial % 3;
    const DensityState out = refresh(DensityState(rho), static_cast<std::size_t>(spin), -0.2);
    const Populations oracle = reset(p, spin, -0.2);
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(out.matrix()(k, k).real(), oracle[k], 1e-15);
  }
}

TEST(Depolarize, ScalesPolarization) {
  const DensityState rho = thermal_state({0.4, 0.4});
  const DensityState out = depolarize(rho, 0, 0.1);
  EXPECT_NEAR(measure_polarization(out, 0), 0.36, 1e-15);
  EXPECT_NEAR(measure_polarization(out, 1), 0.4, 1e-15);
  EXPECT_THROW(depolarize(rho, 0, -0.1), std::invalid_argument);
}

TEST(Hbac, IdealRoundMatchesOracle) {
  for (double eb : {1e-5, 0.05, 0.3, 0.8}) {
    HbacConfig cfg;
    cfg.bath_polarization = eb;
    const HbacTrace tr = hbac_run(three_carbons(), cfg);
    ASSERT_EQ(tr.ideal.size(), 6u);
    EXPECT_TRUE(tr.compiled.empty());
    const Populations p = oracle_round(eb, 0.0);
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR(tr.ideal.back().polarization[static_cast<std::size_t>(i)], pol(p, i), 1e-12);
    EXPECT_NEAR(tr.final_target(), (3 * eb - eb * eb * eb) / 2, 1e-12);
  }
}

TEST(Hbac, LowPolarizationRatioIsOneAndAHalf) {
  HbacConfig cfg;
  cfg.bath_polarization = 1e-5;
  const HbacTrace tr = hbac_run(three_carbons(), cfg);
  EXPECT_NEAR(tr.final_target() / cfg.bath_polarization, 1.5, 1e-9);
  const std::vector<std::string> labels{"refresh", "swap_m1", "refresh", "swap_m2", "refresh", "compress"};
  for (std::size_t s = 0; s < labels.size(); ++s) {
    EXPECT_EQ(tr.ideal[s].label, labels[s]);
    EXPECT_EQ(tr.ideal[s].step, s + 1);
    EXPECT_EQ(tr.ideal[s].round, 1u);
  }
}

TEST(Hbac, OtherOuterSpinAsRefreshTarget) {
  HbacConfig cfg;
  cfg.bath_polarization = 0.2;
  cfg.refresh_target = 2;
  const HbacTrace tr = hbac_run(three_carbons(), cfg);
  EXPECT_NEAR(tr.final_target(), (3 * 0.2 - 0.008) / 2, 1e-12);
  cfg.refresh_target = 1;
  EXPECT_THROW(hbac_run(three_carbons(), cfg), std::invalid_argument);
}

TEST(Hbac, RejectsBadConfig) {
  HbacConfig cfg;
  cfg.n_rounds = 0;
  EXPECT_THROW(hbac_run(three_carbons(), cfg), std::invalid_argument);
  cfg.n_rounds = 1;
  cfg.bath_polarization = 1.1;
  EXPECT_THROW(hbac_run(three_carbons(), cfg), std::invalid_argument);
  cfg.bath_polarization = 0.1;
  const SpinSystem two = SpinSystemBuilder().spin("a", "C", 0).spin("b", "C", 100).build();
  EXPECT_THROW(hbac_run(two, cfg), std::invalid_argument);
}

TEST(Hbac, RepeatedRoundsApproachTwiceTheBath) {
  HbacConfig cfg;
  cfg.bath_polarization = 1e-5;
  cfg.n_rounds = 10;
  const HbacTrace tr = hbac_run(three_carbons(), cfg);
  EXPECT_EQ(tr.ideal.size(), 6u + 9u * 4u);
  double last = 0.0;
  for (const auto& s : tr.ideal) {
    if (s.label != "compress") continue;
    const double ratio = s.polarization[kHbacTarget] / cfg.bath_polarization;
    EXPECT_GT(ratio, last);
    EXPECT_LT(ratio, 2.0);
    last = ratio;
  }
  // Linear regime: each round maps x -> (2 + x)/2.
  EXPECT_NEAR(last, 2.0 - std::pow(0.5, 10), 1e-8);
}

TEST(Hbac, LossModelMatchesOracle) {
  for (double r : {0.0, 0.015, 0.05}) {
    HbacConfig cfg;
    cfg.bath_polarization = 0.1;
    cfg.compute_mode = HbacComputeMode::CompiledPulses;
    cfg.loss_rate = r;
    const HbacTrace tr = hbac_run(three_carbons(), cfg);
    ASSERT_EQ(tr.compiled.size(), tr.ideal.size());
    const Populations p = oracle_round(0.1, r);
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR(tr.compiled.back().polarization[static_cast<std::size_t>(i)], pol(p, i), 1e-12);
    EXPECT_NEAR(tr.ideal.back().polarization[1], (0.3 - 0.001) / 2, 1e-12);
    if (r > 0.0) EXPECT_LT(tr.final_target(), tr.ideal.back().polarization[1]);
  }
}

TEST(Hbac, CompiledGatesAreUsed) {
  HbacConfig cfg;
  cfg.bath_polarization = 0.1;
  cfg.compute_mode = HbacComputeMode::CompiledPulses;
  HbacGates gates = ideal_hbac_gates();
  HbacTrace tr = hbac_run(three_carbons(), cfg, &gates);
  EXPECT_NEAR(tr.final_target(), tr.ideal.back().polarization[1], 1e-14);
  // A compression that does nothing leaves C2 at the bath value.
  gates.compress = Operator::Identity(8, 8);
  tr = hbac_run(three_carbons(), cfg, &gates);
  EXPECT_NEAR(tr.final_target(), 0.1, 1e-14);
  gates.compress = 2.0 * Operator::Identity(8, 8);
  EXPECT_THROW(hbac_run(three_carbons(), cfg, &gates), std::invalid_argument);
}

TEST(Hbac, CompileGatesWithGrape) {
  OptimizerConfig c;
  c.n_steps = 40;
  c.dt = 50e-6;
  c.max_amplitude = kTwoPi * 5e3;
  c.max_iterations = 30;
  c.seed = 2;
  const CompiledHbacGates g = compile_hbac_gates(three_carbons(), c);
  for (const auto* r : {&g.swap_m1, &g.swap_m2, &g.compress}) {
    EXPECT_GT(r->fitness, r->trace.front());
    EXPECT_EQ(r->controls.n_steps(), 40u);
  }
  HbacConfig cfg;
  cfg.bath_polarization = 0.1;
  cfg.compute_mode = HbacComputeMode::CompiledPulses;
  const HbacTrace tr = hbac_run(three_carbons(), cfg, &g.gates);
  EXPECT_EQ(tr.compiled.size(), tr.ideal.size());
  EXPECT_LE(std::abs(tr.final_target()), 1.0);
}

TEST(Hyperfine, TransitionTableMatchesManifoldFormula) {
  const HyperfineParameters p{1.5e6, 3e6, 5e6, 3e6};
  const auto table = transition_table(hyperfine_system(p));
  ASSERT_EQ(table.size(), 6u);
  // Each electron manifold holds a nucleus in an effective field
  // (w_n +/- A_z/2, A_x/2).
  const double rp = std::hypot(p.nuclear_larmor_hz + p.az_hz / 2, p.ax_hz / 2);
  const double rm = std::hypot(p.nuclear_larmor_hz - p.az_hz / 2, p.ax_hz / 2);
  const double e1 = p.electron_offset_hz / 2 - rp / 2, e2 = p.electron_offset_hz / 2 + rp / 2;
  const double e3 = -p.electron_offset_hz / 2 - rm / 2, e4 = -p.electron_offset_hz / 2 + rm / 2;
  const std::array<double, 4> e{e1, e2, e3, e4};
  for (const auto& t : table) EXPECT_NEAR(t.frequency_hz, e[t.lower - 1] - e[t.upper - 1], 1e-6);
  EXPECT_NEAR(transition_carrier_hz(hyperfine_system(p)), e1 - e3, 1e-6);
  // Nuclear transitions carry no S_x strength; with A_x mixing both
  // electron transitions out of level 1 are allowed and sum to 1/4.
  double s13 = 0, s14 = 0;
  for (const auto& t : table) {
    if (t.lower == 1 && t.upper == 2) EXPECT_NEAR(t.strength, 0.0, 1e-15);
    if (t.lower == 1 && t.upper == 3) s13 = t.strength;
    if (t.lower == 1 && t.upper == 4) s14 = t.strength;
  }
  EXPECT_GT(s13, 0.01);
  EXPECT_GT(s14, 0.01);
  EXPECT_NEAR(s13 + s14, 0.25, 1e-12);
  EXPECT_THROW(transition_carrier_hz(hyperfine_system(p), 1, 2), std::invalid_argument);
}

TEST(Hyperfine, RankIsFullExactlyWhenAxMixes) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> wn(1e6, 10e6), frac(0.3, 2.0), off(-2e6, 2e6);
  for (int trial = 0; trial < 20; ++trial) {
    HyperfineParameters p{off(rng), wn(rng), 0.0, 0.0};
    p.az_hz = frac(rng) * p.nuclear_larmor_hz;
    p.ax_hz = frac(rng) * p.nuclear_larmor_hz;
    EXPECT_EQ(single_transition_rank(hyperfine_system(p), HamiltonianMode::Full), 15u);
    p.ax_hz = 0.0;
    EXPECT_LT(single_transition_rank(hyperfine_system(p), HamiltonianMode::Full), 15u);
  }
}

TEST(Hyperfine, RefusesUncontrollablePair) {
  const SpinSystem sys = hyperfine_system({0.0, 3e6, 5e6, 0.0});
  OptimizerConfig c;
  try {
    single_transition_gate(sys, cnot_gate(0, 1, 2), c);
    FAIL() << "expected refusal";
  } catch (const UncontrollableSystem& e) {
    EXPECT_LT(e.rank(), 15u);
    EXPECT_EQ(e.full_rank(), 15u);
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
  EXPECT_THROW(single_transition_gate(three_carbons(), Operator::Identity(8, 8), c),
               std::invalid_argument);
}

TEST(Hyperfine, ElectronControlledNuclearFlip) {
  const SpinSystem sys = hyperfine_system({0.0, 3e6, 5e6, 3e6});
  OptimizerConfig c;
  c.n_steps = 400;
  c.dt = 5e-9;
  c.max_amplitude = kTwoPi * 20e6;
  c.max_iterations = 500;
  c.target_fidelity = 0.995;
  c.seed = 1;
  const OptimizerResult r = single_transition_gate(sys, cnot_gate(0, 1, 2), c);
  EXPECT_GE(r.fitness, 0.99);
  ASSERT_EQ(r.controls.channels().size(), 1u);
  EXPECT_EQ(r.controls.channels()[0].species, "e");
  EXPECT_NEAR(r.controls.channels()[0].carrier_offset_hz, transition_carrier_hz(sys), 1e-9);
  EXPECT_NEAR(fitness(r.controls, sys, cnot_gate(0, 1, 2)), r.fitness, 1e-12);
}

TEST(Hyperfine, IdentityTarget) {
  const SpinSystem sys = hyperfine_system({0.0, 3e6, 5e6, 3e6});
  OptimizerConfig c;
  c.n_steps = 200;
  c.dt = 5e-9;
  c.max_amplitude = kTwoPi * 20e6;
  c.max_iterations = 500;
  c.seed = 4;
  const OptimizerResult r = single_transition_gate(sys, Operator::Identity(4, 4), c);
  EXPECT_GE(r.fitness, 0.999);
}
