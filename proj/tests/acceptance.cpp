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

// End-to-end acceptance suite. Every check prints one PASS/FAIL line and the
// process exits nonzero if any check fails. Reference values come from
// oracles written here, independent of the library code paths under test.

#include "cli.hpp"
#include "nmrqip/grape.hpp"
#include "nmrqip/protocols.hpp"
#include "nmrqip/pulse_compiler.hpp"
#include "nmrqip/pulse_errors.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace nmrqip;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kCnotIdealTol = 1e-9;
constexpr double kCnotFiniteMin = 0.999;
constexpr double kCnotSeconds = 1.0;
constexpr double kRefocusTol = 1e-9;
constexpr double kRefocusSeconds = 5.0;
constexpr double kPhaseTrackTol = 1e-9;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientSeconds = 30.0;
constexpr double kGrapeMin = 0.999;
constexpr std::size_t kGrapeBudget = 2000;
constexpr double kGrapeSeconds = 300.0;
constexpr double kRobustFloor = 0.99;
constexpr double kRobustSeconds = 600.0;
constexpr double kHbacOracleTol = 1e-12;
constexpr double kHbacRatioTol = 1e-9;
constexpr double kHbacSeconds = 1.0;
constexpr double kHyperfineMin = 0.99;
constexpr double kHyperfineSeconds = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Hand-built references.

// CNOT with spin 0 as the most significant bit.
Operator exact_cnot(std::size_t control, std::size_t target, std::size_t n) {
  const std::size_t dim = std::size_t{1} << n;
  Operator u = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    const bool c = (k >> (n - 1 - control)) & 1;
    const std::size_t image = c ? k ^ (std::size_t{1} << (n - 1 - target)) : k;
    u(static_cast<Eigen::Index>(image), static_cast<Eigen::Index>(k)) = 1.0;
  }
  return u;
}

// exp(-i angle Z_a Z_b) on n spins.
Operator exact_zz(double angle, std::size_t a, std::size_t b, std::size_t n) {
  const std::size_t dim = std::size_t{1} << n;
  Operator u = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    const int za = ((k >> (n - 1 - a)) & 1) ? -1 : 1;
    const int zb = ((k >> (n - 1 - b)) & 1) ? -1 : 1;
    u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = std::exp(-kI * angle * double(za * zb));
  }
  return u;
}

double overlap_fidelity(const Operator& u, const Operator& v) {
  const double d = static_cast<double>(u.rows());
  return std::norm((v.adjoint() * u).trace()) / (d * d);
}

double phase_distance(const Operator& a, const Operator& b) {
  const Complex o = (b.adjoint() * a).trace();
  return (a - o / std::abs(o) * b).cwiseAbs().maxCoeff();
}

Operator haar_unitary(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> g;
  Operator a(dim, dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = Complex(g(rng), g(rng));
  return Eigen::HouseholderQR<Operator>(a).householderQ();
}

SpinSystem weak_pair() {
  return SpinSystemBuilder().spin("a", "H", 0.0).spin("b", "H", 10e3).j(0, 1, 100.0).build();
}

SpinSystem strong_pair() {
  return SpinSystemBuilder().spin("a", "H", -500).spin("b", "H", 500).j(0, 1, 200).dipolar(0, 1, 800).build();
}

OptimizerConfig strong_pair_config() {
  OptimizerConfig cfg;
  cfg.n_steps = 80;
  cfg.dt = 25e-6;
  cfg.max_iterations = kGrapeBudget;
  cfg.max_amplitude = kTwoPi * 5e3;
  cfg.seed = 1;
  return cfg;
}

void cnot_pipeline() {
  const auto t0 = Clock::now();
  const auto sys = weak_pair();
  const Operator reference = exact_cnot(0, 1, 2);
  const double ideal = overlap_fidelity(sequence_propagator(compile_cnot(sys, 0, 1).sequence, sys), reference);
  CompileOptions opts;
  opts.pulse_duration = 10e-6;
  const auto finite = compile_cnot(sys, 0, 1, opts).sequence;
  const double raw = overlap_fidelity(sequence_propagator(finite, sys), reference);
  const double corrected = overlap_fidelity(sequence_propagator(correct_sequence(finite, sys), sys), reference);
  const double t = seconds_since(t0);
  report(1, ideal >= 1.0 - kCnotIdealTol && corrected >= kCnotFiniteMin && t < kCnotSeconds,
         fmt("CNOT ideal pulses 1-F=%.2e; 10 us pulses F=%.6f raw, %.6f corrected; %.3f s", 1.0 - ideal, raw,
             corrected, t));
}

void refocusing() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coupling(20.0, 200.0), offset(-5e3, 5e3), tau_dist(1e-3, 2e-2);
  double worst = 1.0;
  for (int draw = 0; draw < 50; ++draw) {
    const auto sys = SpinSystemBuilder()
                         .spin("a", "C", offset(rng))
                         .spin("b", "C", offset(rng) + 12e3)
                         .spin("c", "C", offset(rng) - 12e3)
                         .j(0, 1, coupling(rng))
                         .j(0, 2, coupling(rng))
                         .j(1, 2, coupling(rng))
                         .build();
    const double tau = tau_dist(rng);
    const auto seq = refocus_schedule(sys, std::make_pair(0, 1), tau);
    const Operator target = exact_zz(kPi * tau / 2 * sys.j(0, 1), 0, 1, 3);
    worst = std::min(worst, overlap_fidelity(sequence_propagator(seq, sys), target));
  }
  const double t = seconds_since(t0);
  report(2, worst >= 1.0 - kRefocusTol && t < kRefocusSeconds,
         fmt("refocusing over 50 draws, worst 1-F=%.2e; %.3f s", 1.0 - worst, t));
}

void phase_tracking() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> angle(-kTwoPi, kTwoPi), unit(0.0, 1.0), coupling(20.0, 200.0),
      offset(-5e3, 5e3);
  std::uniform_int_distribution<int> kind(0, 3), count(3, 14), spin(0, 2);
  double worst = 0.0;
  std::size_t leftover = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto sys = SpinSystemBuilder()
                         .spin("a", "C", offset(rng))
                         .spin("b", "C", offset(rng) + 12e3)
                         .spin("c", "C", offset(rng) - 12e3)
                         .j(0, 1, coupling(rng))
                         .j(0, 2, coupling(rng))
                         .j(1, 2, coupling(rng))
                         .build();
    PulseSequence seq(3);
    const int len = count(rng);
    for (int e = 0; e < len; ++e) {
      const int k = kind(rng);
      if (k == 0) {
        seq.add(Delay{2e-3 * unit(rng)});
      } else if (k == 3) {
        seq.add(VirtualZ{static_cast<std::size_t>(spin(rng)), angle(rng)});
      } else {
        HardPulse p;
        for (std::size_t s = 0; s < 3; ++s)
          if (unit(rng) < 0.5) {
            p.spins.push_back(s);
            p.phases.push_back(angle(rng));
          }
        if (p.spins.empty()) {
          p.spins.push_back(static_cast<std::size_t>(spin(rng)));
          p.phases.push_back(angle(rng));
        }
        p.angle = angle(rng);
        p.duration = unit(rng) < 0.5 ? 0.0 : 2e-5 * unit(rng);
        seq.add(p);
      }
    }
    const auto tracked = phase_track(seq);
    leftover += tracked.count_virtual_z();
    // Reference: apply every event in order, virtual z included, with no
    // terminal frame.
    Operator ref = Operator::Identity(8, 8);
    for (const auto& e : seq.events) ref = event_propagator(e, sys) * ref;
    Operator out = Operator::Identity(8, 8);
    for (const auto& e : tracked.events) out = event_propagator(e, sys) * out;
    out = rz_all(tracked.frame_record, 3) * out;
    worst = std::max(worst, phase_distance(out, ref));
  }
  report(3, worst <= kPhaseTrackTol && leftover == 0,
         fmt("phase tracking over 100 random sequences, max deviation %.2e, %zu virtual z left", worst, leftover));
}

void gradient_check() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> offset(-3e3, 3e3), coupling(-300, 300), unit(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 3);
    SpinSystemBuilder b;
    for (std::size_t k = 0; k < n; ++k) b.spin("s" + std::to_string(k), k == 2 ? "C" : "H", offset(rng));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t c = a + 1; c < n; ++c) b.j(a, c, coupling(rng)).dipolar(a, c, coupling(rng));
    const auto sys = b.build();
    OptimizerConfig cfg;
    cfg.n_steps = 12;
    cfg.dt = 20e-6;
    const double amp = kTwoPi * 20e3;
    const auto channels = cfg.resolved_channels(sys);
    const auto rows = static_cast<Eigen::Index>(channels.size());
    Eigen::MatrixXd ux(rows, 12), uy(rows, 12);
    for (Eigen::Index i = 0; i < ux.size(); ++i) {
      ux(i) = amp * unit(rng);
      uy(i) = amp * unit(rng);
    }
    const Operator goal = haar_unitary(rng, static_cast<Eigen::Index>(sys.dimension()));
    const auto f = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
      return fitness(ControlSequence::from_quadratures(cfg.dt, channels, x, y), sys, goal);
    };
    const auto exact = fitness_gradient(ControlSequence::from_quadratures(cfg.dt, channels, ux, uy), sys, goal,
                                        GradientMode::Exact);
    // Central differences computed here from the fitness alone.
    const double h = 1e-6 * amp;
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < ux.size(); ++i)
      for (int q = 0; q < 2; ++q) {
        Eigen::MatrixXd xp = ux, xm = ux, yp = uy, ym = uy;
        (q == 0 ? xp : yp)(i) += h;
        (q == 0 ? xm : ym)(i) -= h;
        const double fd = (f(xp, yp) - f(xm, ym)) / (2 * h);
        const double ex = q == 0 ? exact.d_ux(i) : exact.d_uy(i);
        num += (ex - fd) * (ex - fd);
        den += fd * fd;
      }
    worst = std::max(worst, std::sqrt(num / den));
  }
  const double t = seconds_since(t0);
  report(4, worst <= kGradientTol && t < kGradientSeconds,
         fmt("gradient vs central differences on 20 instances, worst relative error %.2e; %.2f s", worst, t));
}

void grape_convergence() {
  const auto t0 = Clock::now();
  const auto sys = strong_pair();
  const auto r = grape_optimize(sys, exact_cnot(0, 1, 2), strong_pair_config());
  // Re-simulate the returned controls rather than trusting the reported fitness.
  const double f = overlap_fidelity(evolve_controls(sys, r.controls, HamiltonianMode::Full), exact_cnot(0, 1, 2));
  const double t = seconds_since(t0);
  report(5, f >= kGrapeMin && r.iterations <= kGrapeBudget && t < kGrapeSeconds,
         fmt("strongly coupled CNOT F=%.6f after %zu iterations; %.2f s", f, r.iterations, t));
}

void robustness() {
  const auto t0 = Clock::now();
  const auto sys = strong_pair();
  const Operator goal = exact_cnot(0, 1, 2);
  const double delta = 100.0, rf = 0.03;
  auto cfg = strong_pair_config();
  cfg.target_fidelity = 0.998;
  const auto robust = grape_optimize(sys, goal, cfg, RobustnessEnsemble::default_grid(rf, delta));
  const auto nominal = grape_optimize(sys, goal, cfg);
  const auto worst = [&](const ControlSequence& c) {
    double w = 1.0;
    for (int i = 0; i <= 6; ++i)
      for (int k = 0; k <= 4; ++k) {
        const double s = 1.0 - rf + 2 * rf * i / 6.0, off = -delta + 2 * delta * k / 4.0;
        w = std::min(w, overlap_fidelity(evolve_controls(sys, c, HamiltonianMode::Full, {s, off}), goal));
      }
    return w;
  };
  const double wr = worst(robust.controls), wn = worst(nominal.controls);
  const double t = seconds_since(t0);
  report(6, wr >= kRobustFloor && wn < kRobustFloor && t < kRobustSeconds,
         fmt("rf +/-3%%, offsets +/-100 Hz: robust min F=%.4f, nominal min F=%.4f; %.1f s", wr, wn, t));
}

// Classical bookkeeping on three bits, spin 0 most significant.
using Populations = std::array<double, 8>;
int bit_of(int k, int s) { return (k >> (2 - s)) & 1; }
int flip(int k, int s) { return k ^ (1 << (2 - s)); }

double pol(const Populations& p, int s) {
  double v = 0.0;
  for (int k = 0; k < 8; ++k) v += bit_of(k, s) ? -p[k] : p[k];
  return v;
}

Populations refresh_bits(const Populations& p, int s, double eps) {
  Populations out{};
  for (int k = 0; k < 8; ++k) out[k] = (p[k] + p[flip(k, s)]) * (bit_of(k, s) ? (1 - eps) / 2 : (1 + eps) / 2);
  return out;
}

Populations relabel(const Populations& p, const std::function<int(int)>& image) {
  Populations out{};
  for (int k = 0; k < 8; ++k) out[image(k)] += p[k];
  return out;
}

Populations depolarize_bits(Populations p, double r) {
  for (int s = 0; s < 3; ++s) {
    Populations q{};
    for (int k = 0; k < 8; ++k) q[k] = (1 - r) * p[k] + r * 0.5 * (p[k] + p[flip(k, s)]);
    p = q;
  }
  return p;
}

// One round: spin 0 is refreshed, spin 1 is the target, spin 2 the partner.
Populations hbac_oracle(double eps, double r) {
  const auto swap = [](int a, int b) {
    return [a, b](int k) { return bit_of(k, a) == bit_of(k, b) ? k : flip(flip(k, a), b); };
  };
  Populations p{};
  for (int k = 0; k < 8; ++k) {
    p[k] = 1.0;
    for (int s = 0; s < 3; ++s) p[k] *= bit_of(k, s) ? (1 - eps) / 2 : (1 + eps) / 2;
  }
  p = refresh_bits(p, 0, eps);
  p = depolarize_bits(relabel(p, swap(0, 2)), r);
  p = refresh_bits(p, 0, eps);
  p = depolarize_bits(relabel(p, swap(0, 1)), r);
  p = refresh_bits(p, 0, eps);
  // Compression: CNOT from the target onto both neighbours, Toffoli back, CNOT again.
  const auto compress = [](int k) {
    const auto fan = [](int x) { return bit_of(x, 1) ? flip(flip(x, 0), 2) : x; };
    k = fan(k);
    if (bit_of(k, 0) && bit_of(k, 2)) k = flip(k, 1);
    return fan(k);
  };
  return depolarize_bits(relabel(p, compress), r);
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

void hbac() {
  const auto t0 = Clock::now();
  const auto sys = three_carbons();
  double oracle_err = 0.0;
  for (double eps : {0.05, 0.3, 0.9}) {
    HbacConfig cfg;
    cfg.bath_polarization = eps;
    const HbacTrace tr = hbac_run(sys, cfg);
    const Populations p = hbac_oracle(eps, 0.0);
    for (int s = 0; s < 3; ++s)
      oracle_err = std::max(oracle_err, std::abs(tr.ideal.back().polarization[static_cast<std::size_t>(s)] - pol(p, s)));
    // The target also follows the closed-form majority bias.
    oracle_err = std::max(oracle_err, std::abs(tr.final_target() - (3 * eps - eps * eps * eps) / 2));
  }
  HbacConfig low;
  low.bath_polarization = 1e-5;
  const double ratio = hbac_run(sys, low).final_target() / 1e-5;

  // Loss accounting. The reported boost 1.39 against the ideal 1.5 gives the
  // retained fraction; spread uniformly over five steps that is about 1.5%
  // per step.
  const double retained = 1.39 / 1.5;
  const double per_step = 1.0 - std::pow(retained, 1.0 / 5.0);
  const bool arithmetic = std::round(retained * 1000) / 10 == 92.7 && std::abs(per_step - 0.015) < 5e-4;
  // Simulated loss models: depolarizing loss r after each gate. At small bias
  // the target ends at eps q (1 + q + q^2) / 2 with q = 1 - r, so the retained
  // fraction is q (1 + q + q^2) / 3.
  double loss_err = 0.0, identity_err = 0.0;
  double f_at_step = 0.0;
  for (double r : {0.005, 0.015, 0.05}) {
    HbacConfig cfg;
    cfg.bath_polarization = 1e-5;
    cfg.compute_mode = HbacComputeMode::CompiledPulses;
    cfg.loss_rate = r;
    const HbacTrace tr = hbac_run(sys, cfg);
    const Populations p = hbac_oracle(1e-5, r);
    for (int s = 0; s < 3; ++s)
      loss_err = std::max(loss_err, std::abs(tr.compiled.back().polarization[static_cast<std::size_t>(s)] - pol(p, s)));
    const double q = 1.0 - r;
    const double f = tr.final_target() / tr.ideal.back().polarization[1];
    identity_err = std::max(identity_err, std::abs(f - q * (1 + q + q * q) / 3));
    if (r == 0.015) f_at_step = f;
  }
  const double t = seconds_since(t0);
  report(7,
         oracle_err <= kHbacOracleTol && std::abs(ratio - 1.5) <= kHbacRatioTol && arithmetic &&
             loss_err <= kHbacOracleTol && identity_err <= 1e-6 && t < kHbacSeconds,
         fmt("HBAC oracle dev %.1e, ratio %.12f at 1e-5, 1.39/1.5=%.1f%% -> %.2f%%/step over 5, "
             "loss model dev %.1e (retained %.4f at 1.5%%/gate); %.3f s",
             oracle_err, ratio, 100 * retained, 100 * per_step, std::max(loss_err, identity_err), f_at_step, t));
}

void hyperfine() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(8128);
  std::uniform_real_distribution<double> wn(1e6, 10e6), frac(0.3, 2.0), off(-2e6, 2e6);
  std::size_t full = 0, reduced = 0;
  for (int draw = 0; draw < 20; ++draw) {
    HyperfineParameters p{off(rng), wn(rng), 0.0, 0.0};
    p.az_hz = frac(rng) * p.nuclear_larmor_hz;
    p.ax_hz = frac(rng) * p.nuclear_larmor_hz;
    if (single_transition_rank(hyperfine_system(p), HamiltonianMode::Full) == 15) ++full;
    p.ax_hz = 0.0;
    if (single_transition_rank(hyperfine_system(p), HamiltonianMode::Full) < 15) ++reduced;
  }
  const SpinSystem sys = hyperfine_system({0.0, 3e6, 5e6, 3e6});
  OptimizerConfig c;
  c.n_steps = 400;
  c.dt = 5e-9;
  c.max_amplitude = kTwoPi * 20e6;
  c.max_iterations = 500;
  c.target_fidelity = 0.995;
  c.seed = 1;
  const OptimizerResult r = single_transition_gate(sys, exact_cnot(0, 1, 2), c);
  const double f = overlap_fidelity(evolve_controls(sys, r.controls, HamiltonianMode::Full), exact_cnot(0, 1, 2));
  const double t = seconds_since(t0);
  report(8, full == 20 && reduced == 20 && f >= kHyperfineMin && t < kHyperfineSeconds,
         fmt("hyperfine rank 15 in %zu/20 draws, reduced in %zu/20 with A_x=0; electron-controlled flip F=%.5f; "
             "%.2f s",
             full, reduced, f, t));
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "nmrqip");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// Every manifest entry and the manifest itself must agree byte for byte.
bool same_artifacts(const fs::path& a, const fs::path& b) {
  const std::string ma = read_text((a / "manifest.json").string());
  if (ma != read_text((b / "manifest.json").string())) return false;
  for (const auto& f : nlohmann::json::parse(ma)["files"]) {
    const std::string name = f["path"];
    const std::string body = read_text((a / name).string());
    if (body != read_text((b / name).string()) || cli::sha256_hex(body) != f["sha256"]) return false;
  }
  return true;
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "nmrqip_acceptance";
  fs::remove_all(root);
  const std::string data = NMRQIP_TEST_DATA;
  const std::vector<std::vector<std::string>> jobs{
      {"grape", "--system", data + "/strong_pair.json", "--target", "cnot:0,1", "--steps", "40", "--dt", "25e-6",
       "--max-amp-hz", "5000", "--iterations", "40", "--seed", "11"},
      {"simplex", "--system", data + "/strong_pair.json", "--target", "cnot:0,1", "--periods", "4", "--iterations",
       "300", "--seed", "5"},
      {"hbac", "--system", data + "/malonic_carbons.json", "--eps", "0.01", "--rounds", "3", "--compiled", "--loss", "0.015"},
      {"compile-cnot", "--system", data + "/pair_weak.json", "--control", "0", "--target", "1", "--pulse-duration",
       "10e-6", "--correct"},
  };
  std::size_t same = 0;
  std::string failed;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const fs::path a = root / (std::to_string(j) + "a"), b = root / (std::to_string(j) + "b");
    auto ja = jobs[j], jb = jobs[j];
    ja.insert(ja.end(), {"--out", a.string()});
    jb.insert(jb.end(), {"--out", b.string()});
    if (invoke(ja) == 0 && invoke(jb) == 0 && same_artifacts(a, b))
      ++same;
    else
      failed += " " + jobs[j][0];
  }
  fs::remove_all(root);
  report(9, same == jobs.size(),
         fmt("re-runs with identical seed produce hash-identical artifacts for %zu/%zu jobs%s", same, jobs.size(),
             failed.c_str()));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{cnot_pipeline, refocusing,  phase_tracking,
                                                    gradient_check, grape_convergence, robustness,
                                                    hbac,          hyperfine,   determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      report(static_cast<int>(&c - criteria.data()) + 1, false, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
