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

// Command-line front end. Exit codes: 0 success (including a job that
// reports non-convergence in its status field), 1 internal error, 2 parse
// error, 3 validation error.

#pragma once

#include "nmrqip/controllability.hpp"
#include "nmrqip/grape.hpp"
#include "nmrqip/io.hpp"
#include "nmrqip/protocols.hpp"
#include "nmrqip/pulse_compiler.hpp"
#include "nmrqip/pulse_errors.hpp"
#include "nmrqip/simplex.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nmrqip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

/// Output directory that remembers what it wrote and closes with a manifest
/// of content hashes. Wall time goes to timing.json, outside the manifest.
class ArtifactDir {
 public:
  explicit ArtifactDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& text) {
    write_text((dir_ / name).string(), text);
    files_.emplace_back(name, text);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void finish(const std::string& command, std::uint64_t seed, double wall_seconds) {
    std::sort(files_.begin(), files_.end());
    json files = json::array();
    for (const auto& [name, text] : files_)
      files.push_back({{"path", name}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
    write_text((dir_ / "manifest.json").string(),
               json{{"command", command}, {"seed", seed}, {"files", files}}.dump(2) + "\n");
    write_text((dir_ / "timing.json").string(), json{{"wall_time_s", wall_seconds}}.dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Argument helpers

inline std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const double v = parse_double(tok);
    if (!(v >= 0.0) || v != std::floor(v)) throw FormatError("expected a spin index: '" + tok + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

/// Gate names: identity, cnot:C,T, swap:A,B, not:S, hadamard:S, compress.
inline Operator parse_target(const std::string& spec, std::size_t n) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::vector<std::size_t> idx =
      colon == std::string::npos ? std::vector<std::size_t>{} : parse_indices(spec.substr(colon + 1));
  const auto dim = static_cast<Eigen::Index>(dimension_for(n));
  const auto need = [&](std::size_t k) {
    if (idx.size() != k) throw ConfigError("target '" + spec + "' needs " + std::to_string(k) + " spin indices");
    for (auto i : idx)
      if (i >= n) throw ConfigError("target '" + spec + "' references a missing spin");
  };
  if (name == "identity") return Operator::Identity(dim, dim);
  if (name == "cnot") {
    need(2);
    return cnot_gate(idx[0], idx[1], n);
  }
  if (name == "swap") {
    need(2);
    return swap_gate(idx[0], idx[1], n);
  }
  if (name == "not") {
    need(1);
    return pauli_embed(Axis::X, idx[0], n);
  }
  if (name == "hadamard") {
    need(1);
    return (pauli_embed(Axis::X, idx[0], n) + pauli_embed(Axis::Z, idx[0], n)) / std::sqrt(2.0);
  }
  if (name == "compress") {
    if (n != 3) throw ConfigError("compress target needs three spins");
    return compression_gate();
  }
  throw ConfigError("unknown target '" + spec + "'");
}

/// "a:b:n" for n evenly spaced points, or a comma list.
inline std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() != 3) throw FormatError("grid must be start:stop:count");
    const double a = parse_double(parts[0]), b = parse_double(parts[1]);
    const double c = parse_double(parts[2]);
    if (!(c >= 1.0) || c != std::floor(c)) throw FormatError("grid count must be a positive integer");
    const auto n = static_cast<std::size_t>(c);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
      out[k] = n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_double(tok));
  if (out.empty()) throw FormatError("empty grid");
  return out;
}

inline HamiltonianMode parse_mode(const std::string& s) {
  if (s == "weak") return HamiltonianMode::Weak;
  if (s == "full") return HamiltonianMode::Full;
  throw ConfigError("hamiltonian must be weak or full");
}

/// Optimizer flags shared by grape, simplex, hyperfine and hbac --grape.
struct OptimizerFlags {
  std::size_t steps;
  double dt;
  double max_amp_hz;
  std::size_t iterations;
  double fidelity;
  std::string method = "cg";
  std::string gradient = "exact";
  std::string hamiltonian = "full";
  std::string on_stall = "stop";
  std::vector<std::string> channels;
  double robust_rf = 0.0;
  double robust_offset_hz = 0.0;

  OptimizerFlags(std::size_t s, double d, double amp_hz, std::size_t it, double f)
      : steps(s), dt(d), max_amp_hz(amp_hz), iterations(it), fidelity(f) {}

  void add(CLI::App* app, bool gradient_flags = true) {
    app->add_option("--steps", steps, "piecewise-constant steps")->capture_default_str();
    app->add_option("--dt", dt, "step length in seconds")->capture_default_str();
    app->add_option("--max-amp-hz", max_amp_hz, "nutation bound in Hz")->capture_default_str();
    app->add_option("--iterations", iterations, "iteration budget")->capture_default_str();
    app->add_option("--fidelity", fidelity, "target fidelity")->capture_default_str();
    app->add_option("--hamiltonian", hamiltonian, "weak or full")->capture_default_str();
    app->add_option("--channel", channels, "control channel species@offset_hz (repeatable)");
    app->add_option("--robust-rf", robust_rf, "rf_scale half-width of the 3x3 training grid");
    app->add_option("--robust-offset-hz", robust_offset_hz, "field-offset half-width of the training grid");
    if (gradient_flags) {
      app->add_option("--method", method, "sa or cg")->capture_default_str();
      app->add_option("--gradient", gradient, "exact, first-order or fd")->capture_default_str();
      app->add_option("--on-stall", on_stall, "stop or restart")->capture_default_str();
    }
  }

  OptimizerConfig config(std::uint64_t seed) const {
    OptimizerConfig c;
    c.n_steps = steps;
    c.dt = dt;
    c.max_amplitude = kTwoPi * max_amp_hz;
    c.max_iterations = iterations;
    c.target_fidelity = fidelity;
    c.seed = seed;
    c.hamiltonian = parse_mode(hamiltonian);
    if (method == "sa") c.method = OptimizerMethod::SteepestAscent;
    else if (method == "cg") c.method = OptimizerMethod::ConjugateGradient;
    else throw ConfigError("method must be sa or cg");
    if (gradient == "exact") c.gradient_mode = GradientMode::Exact;
    else if (gradient == "first-order") c.gradient_mode = GradientMode::FirstOrder;
    else if (gradient == "fd") c.gradient_mode = GradientMode::FiniteDifference;
    else throw ConfigError("gradient must be exact, first-order or fd");
    if (on_stall == "stop") c.on_stall = StallAction::Stop;
    else if (on_stall == "restart") c.on_stall = StallAction::Restart;
    else throw ConfigError("on-stall must be stop or restart");
    for (const auto& ch : channels) c.channels.push_back(parse_channel_label(ch));
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return c;
  }

  RobustnessEnsemble ensemble() const {
    if (robust_rf == 0.0 && robust_offset_hz == 0.0) return RobustnessEnsemble::nominal();
    return RobustnessEnsemble::default_grid(robust_rf, robust_offset_hz);
  }
};

inline json polarization_json(const PolarizationVector& p) { return json(p); }

// Bloch components Tr(rho sigma) of every spin.
inline std::string bloch_csv(const DensityState& rho) {
  const std::size_t n = rho.n_spins();
  std::string out = "spin,x,y,z\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::string row = std::to_string(i);
    for (Axis a : {Axis::X, Axis::Y, Axis::Z})
      row += "," + format_double((rho.matrix() * pauli_embed(a, i, n)).trace().real());
    out += row + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Runs one command line; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"nmrqip: NMR quantum-control simulator, pulse compiler and optimizer"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  std::string system_path, out_dir;
  std::uint64_t seed = 0;
  const auto common = [&](CLI::App* sub, bool need_system, bool need_out) {
    auto* s = sub->add_option("--system", system_path, "spin-system JSON")->check(CLI::ExistingFile);
    if (need_system) s->required();
    auto* o = sub->add_option("--out", out_dir, "artifact directory");
    if (need_out) o->required();
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "propagate a pulse program or control sequence");
  common(sim, true, true);
  std::string sim_pulse, sim_controls, sim_initial = "pure", sim_mode = "weak", sim_target;
  auto* sim_src = sim->add_option_group("source");
  sim_src->add_option("--pulse", sim_pulse, "pulse-program JSON")->check(CLI::ExistingFile);
  sim_src->add_option("--controls", sim_controls, "control CSV")->check(CLI::ExistingFile);
  sim_src->require_option(1);
  sim->add_option("--initial", sim_initial, "pure, or comma-separated polarizations")->capture_default_str();
  sim->add_option("--hamiltonian", sim_mode, "weak or full")->capture_default_str();
  sim->add_option("--target", sim_target, "gate to score the propagator against");

  // compile-cnot
  auto* cc = app.add_subcommand("compile-cnot", "compile a delay-based CNOT");
  common(cc, true, true);
  std::size_t cc_control = 0, cc_target = 1;
  double cc_duration = 0.0;
  bool cc_correct = false;
  cc->add_option("--control", cc_control)->capture_default_str();
  cc->add_option("--target", cc_target)->capture_default_str();
  cc->add_option("--pulse-duration", cc_duration, "hard-pulse length in seconds")->capture_default_str();
  cc->add_flag("--correct", cc_correct, "absorb first-order pulse errors into delays and frames");

  // refocus
  auto* rf = app.add_subcommand("refocus", "decoupling schedule keeping one coupling");
  common(rf, true, true);
  std::string rf_keep;
  double rf_tau = 0.0;
  rf->add_option("--keep", rf_keep, "active pair i,j; omit to refocus everything");
  rf->add_option("--tau", rf_tau, "period in seconds")->required();

  // grape
  auto* gr = app.add_subcommand("grape", "gradient pulse optimization");
  common(gr, true, true);
  std::string gr_target;
  OptimizerFlags gr_flags(100, 1e-5, 10e3, 1000, 0.999);
  gr->add_option("--target", gr_target, "identity | cnot:C,T | swap:A,B | not:S | hadamard:S | compress")->required();
  gr_flags.add(gr);

  // simplex
  auto* sx = app.add_subcommand("simplex", "Nelder-Mead search over a few constant periods");
  common(sx, true, true);
  std::string sx_target;
  std::size_t sx_periods = 3;
  OptimizerFlags sx_flags(100, 1e-5, 10e3, 5000, 0.999);
  sx->add_option("--target", sx_target)->required();
  sx->add_option("--periods", sx_periods)->capture_default_str();
  sx_flags.add(sx, false);

  // hbac
  auto* hb = app.add_subcommand("hbac", "three-spin heat-bath algorithmic cooling");
  common(hb, false, true);
  bool hb_ideal = false, hb_compiled = false, hb_grape = false;
  double hb_eps = 1e-5, hb_loss = 0.0;
  std::size_t hb_rounds = 1, hb_refresh = 0;
  auto* hb_mode = hb->add_option_group("mode");
  hb_mode->add_flag("--ideal", hb_ideal, "exact gates (default)");
  hb_mode->add_flag("--compiled", hb_compiled, "simulated gates with per-gate loss");
  hb_mode->require_option(0, 1);
  hb->add_option("--eps", hb_eps, "bath polarization")->capture_default_str();
  hb->add_option("--rounds", hb_rounds)->capture_default_str();
  hb->add_option("--loss", hb_loss, "depolarizing loss per gate (compiled mode)")->capture_default_str();
  hb->add_option("--refresh-target", hb_refresh, "C_m spin, 0 or 2")->capture_default_str();
  hb->add_flag("--grape", hb_grape, "compiled mode: optimize the gates with GRAPE on --system");
  OptimizerFlags hb_flags(100, 20e-6, 5e3, 500, 0.99);
  hb_flags.add(hb);

  // hyperfine
  auto* hf = app.add_subcommand("hyperfine", "single-transition control of an electron-nuclear pair");
  common(hf, false, true);
  HyperfineParameters hf_params{0.0, 3e6, 5e6, 3e6};
  std::string hf_target = "cnot:0,1";
  hf->add_option("--electron-offset-hz", hf_params.electron_offset_hz)->capture_default_str();
  hf->add_option("--nuclear-larmor-hz", hf_params.nuclear_larmor_hz)->capture_default_str();
  hf->add_option("--az-hz", hf_params.az_hz)->capture_default_str();
  hf->add_option("--ax-hz", hf_params.ax_hz)->capture_default_str();
  hf->add_option("--target", hf_target)->capture_default_str();
  OptimizerFlags hf_flags(400, 5e-9, 20e6, 500, 0.995);
  hf_flags.add(hf);

  // controllability
  auto* ct = app.add_subcommand("controllability", "Lie-algebra rank of drift plus controls");
  common(ct, true, false);
  std::vector<std::string> ct_channels;
  bool ct_x_only = false, ct_single = false;
  ct->add_option("--channel", ct_channels, "species@offset_hz (repeatable); default one per species");
  ct->add_flag("--x-only", ct_x_only, "x quadrature only");
  ct->add_flag("--single-transition", ct_single, "hyperfine pair: S_x drive on the 1-3 transition");
  std::string ct_mode = "full";
  ct->add_option("--hamiltonian", ct_mode)->capture_default_str();

  // sweep
  auto* sw = app.add_subcommand("sweep", "fidelity of fixed controls over rf_scale x field offset");
  common(sw, true, true);
  std::string sw_controls, sw_target, sw_rf = "0.97:1.03:7", sw_offsets = "-100:100:5", sw_mode = "full";
  std::size_t sw_jobs = 1;
  sw->add_option("--controls", sw_controls)->required()->check(CLI::ExistingFile);
  sw->add_option("--target", sw_target)->required();
  sw->add_option("--rf", sw_rf, "start:stop:count or list")->capture_default_str();
  sw->add_option("--offsets-hz", sw_offsets, "start:stop:count or list")->capture_default_str();
  sw->add_option("--jobs", sw_jobs, "concurrent points")->capture_default_str();
  sw->add_option("--hamiltonian", sw_mode)->capture_default_str();

  // validate
  auto* va = app.add_subcommand("validate", "diagnose a spin-system file");
  common(va, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  try {
    if (va->parsed()) {
      const auto diags = validate_config(system_path);
      out << to_json(diags).dump(2) << "\n";
      if (!out_dir.empty()) {
        ArtifactDir dir(out_dir);
        dir.write_json("diagnostics.json", to_json(diags));
        dir.finish("validate", seed, elapsed());
      }
      return has_errors(diags) ? kExitValidation : kExitOk;
    }

    std::optional<SpinSystem> system;
    if (!system_path.empty()) {
      auto parsed = parse_system(parse_json_text(read_text(system_path)));
      if (!parsed.system) throw ConfigError(parsed.diagnostics);
      for (const auto& d : parsed.diagnostics)
        if (d.severity == Severity::Warning) err << "warning: " << d.location << ": " << d.message << "\n";
      system = std::move(parsed.system);
    }

    if (sim->parsed()) {
      ArtifactDir dir(out_dir);
      const std::size_t n = system->size();
      PolarizationVector init(n, 1.0);
      if (sim_initial != "pure") {
        init = parse_grid(sim_initial);
        if (init.size() != n) throw ConfigError("--initial needs one polarization per spin");
      }
      Operator u;
      if (!sim_pulse.empty()) {
        const PulseSequence seq = pulse_sequence_from_json(parse_json_text(read_text(sim_pulse)));
        u = sequence_propagator(seq, *system, parse_mode(sim_mode));
        dir.write("timing.txt", render_timing(seq));
      } else {
        const ControlSequence c = controls_from_csv(read_text(sim_controls));
        u = evolve_controls(*system, c, parse_mode(sim_mode));
      }
      const DensityState rho = evolve_state(thermal_state(init), u);
      dir.write("final_state.csv", bloch_csv(rho));
      json result{{"n_spins", n}, {"polarization", polarization_json(polarizations(rho))}};
      if (!sim_target.empty()) {
        const Operator g = parse_target(sim_target, n);
        result["fidelity"] = {{"average", gate_fidelity(u, g)}, {"worst_case", worst_case_state_fidelity(u, g)}};
      }
      dir.write_json("result.json", result);
      dir.finish("simulate", seed, elapsed());
      return kExitOk;
    }

    if (cc->parsed()) {
      ArtifactDir dir(out_dir);
      CompileOptions opts;
      opts.pulse_duration = cc_duration;
      const CompiledSequence c = compile_cnot(*system, cc_control, cc_target, opts);
      PulseSequence seq = c.sequence;
      json result{{"certificate", c.certificate}};
      result["uncorrected_fidelity"] = gate_fidelity(sequence_propagator(seq, *system), c.target);
      if (cc_correct && cc_duration > 0.0) {
        seq = correct_sequence(seq, *system);
        result["corrected_fidelity"] = gate_fidelity(sequence_propagator(seq, *system), c.target);
      }
      result["events"] = seq.events.size();
      result["duration_s"] = seq.duration();
      dir.write_json("pulse.json", pulse_sequence_to_json(seq));
      dir.write("timing.txt", render_timing(seq));
      dir.write_json("result.json", result);
      dir.finish("compile-cnot", seed, elapsed());
      out << render_timing(seq);
      return kExitOk;
    }

    if (rf->parsed()) {
      ArtifactDir dir(out_dir);
      std::optional<std::pair<std::size_t, std::size_t>> keep;
      json result;
      const std::size_t n = system->size();
      Operator target = Operator::Identity(static_cast<Eigen::Index>(dimension_for(n)),
                                           static_cast<Eigen::Index>(dimension_for(n)));
      if (!rf_keep.empty()) {
        const auto idx = parse_indices(rf_keep);
        if (idx.size() != 2 || idx[0] >= n || idx[1] >= n || idx[0] == idx[1])
          throw ConfigError("--keep needs two distinct spin indices");
        keep = std::make_pair(idx[0], idx[1]);
        // The kept ZZ term carries the dipolar part too.
        const double angle = rf_tau * (0.5 * kPi * system->j(idx[0], idx[1]) + kPi * system->dipolar(idx[0], idx[1]));
        target = HermitianEigen(zz_embed(idx[0], idx[1], n)).exp_minus_i(angle);
      }
      const PulseSequence seq = refocus_schedule(*system, keep, rf_tau);
      result["fidelity"] = gate_fidelity(sequence_propagator(seq, *system), target);
      result["events"] = seq.events.size();
      dir.write_json("pulse.json", pulse_sequence_to_json(seq));
      dir.write("timing.txt", render_timing(seq));
      dir.write_json("result.json", result);
      dir.finish("refocus", seed, elapsed());
      return kExitOk;
    }

    const auto write_run = [&](ArtifactDir& dir, const OptimizerConfig& cfg, const RobustnessEnsemble& ens,
                               const ControlSequence& controls, const std::vector<double>& trace,
                               double fit, std::size_t iterations, std::size_t restarts, OptimizerStatus status,
                               const Operator& goal) {
      const Operator u = evolve_controls(*system, controls, cfg.hamiltonian);
      dir.write("controls.csv", controls_to_csv(controls));
      dir.write_json("run.json", optimizer_artifact(cfg, ens, trace, fit, iterations, restarts, status,
                                                    gate_fidelity(u, goal), worst_case_state_fidelity(u, goal)));
      out << "status " << to_string(status) << ", fitness " << format_double(fit) << ", iterations "
          << iterations << "\n";
    };

    if (gr->parsed()) {
      ArtifactDir dir(out_dir);
      const OptimizerConfig cfg = gr_flags.config(seed);
      const Operator goal = parse_target(gr_target, system->size());
      const RobustnessEnsemble ens = gr_flags.ensemble();
      const OptimizerResult r = grape_optimize(*system, goal, cfg, ens);
      write_run(dir, cfg, ens, r.controls, r.trace, r.fitness, r.iterations, r.restarts, r.status, goal);
      dir.finish("grape", seed, elapsed());
      return kExitOk;
    }

    if (sx->parsed()) {
      ArtifactDir dir(out_dir);
      OptimizerConfig cfg = sx_flags.config(seed);
      cfg.method = OptimizerMethod::Simplex;
      const Operator goal = parse_target(sx_target, system->size());
      const RobustnessEnsemble ens = sx_flags.ensemble();
      const SimplexResult r = simplex_optimize(*system, goal, sx_periods, cfg, ens);
      json periods = json::array();
      for (const auto& p : r.periods)
        periods.push_back({{"amplitude_hz", p.amplitude / kTwoPi}, {"phase_rad", p.phase}, {"duration_s", p.duration}});
      dir.write_json("periods.json", periods);
      write_run(dir, cfg, ens, r.controls, r.trace, r.fitness, r.iterations, r.restarts, r.status, goal);
      dir.finish("simplex", seed, elapsed());
      return kExitOk;
    }

    if (hb->parsed()) {
      ArtifactDir dir(out_dir);
      HbacConfig cfg;
      cfg.bath_polarization = hb_eps;
      cfg.n_rounds = hb_rounds;
      cfg.refresh_target = hb_refresh;
      cfg.loss_rate = hb_loss;
      cfg.compute_mode = hb_compiled ? HbacComputeMode::CompiledPulses : HbacComputeMode::IdealGates;
      if (hb_grape && !hb_compiled) throw ConfigError("--grape needs --compiled");
      if (hb_grape && !system) throw ConfigError("--grape needs --system");
      if (hb_loss != 0.0 && !hb_compiled) throw ConfigError("--loss applies to --compiled mode");
      const SpinSystem sys = system ? *system
                                    : SpinSystemBuilder().spin("Cm", "C", 0).spin("C2", "C", 0).spin("C1", "C", 0).build();
      json result;
      std::optional<CompiledHbacGates> compiled;
      if (hb_grape) {
        compiled = compile_hbac_gates(sys, hb_flags.config(seed), hb_refresh);
        result["gate_fitness"] = {{"swap_m1", compiled->swap_m1.fitness},
                                  {"swap_m2", compiled->swap_m2.fitness},
                                  {"compress", compiled->compress.fitness}};
        result["gate_status"] = {{"swap_m1", to_string(compiled->swap_m1.status)},
                                 {"swap_m2", to_string(compiled->swap_m2.status)},
                                 {"compress", to_string(compiled->compress.status)}};
        dir.write("swap_m1.csv", controls_to_csv(compiled->swap_m1.controls));
        dir.write("swap_m2.csv", controls_to_csv(compiled->swap_m2.controls));
        dir.write("compress.csv", controls_to_csv(compiled->compress.controls));
      }
      const HbacTrace tr = hbac_run(sys, cfg, compiled ? &compiled->gates : nullptr);
      dir.write("trace.csv", hbac_trace_to_csv(tr.primary()));
      dir.write("trace_ideal.csv", hbac_trace_to_csv(tr.ideal));
      if (!tr.compiled.empty()) dir.write("trace_compiled.csv", hbac_trace_to_csv(tr.compiled));
      const double ideal_final = tr.ideal.back().polarization[kHbacTarget];
      result["bath_polarization"] = hb_eps;
      result["mode"] = hb_compiled ? "compiled" : "ideal";
      result["ideal_final_target"] = ideal_final;
      result["ideal_ratio"] = ideal_final / hb_eps;
      if (!tr.compiled.empty()) {
        result["compiled_final_target"] = tr.final_target();
        result["compiled_ratio"] = tr.final_target() / hb_eps;
        result["retained_fraction"] = tr.final_target() / ideal_final;
      }
      dir.write_json("result.json", result);
      dir.finish("hbac", seed, elapsed());
      out << "target polarization ratio " << format_double(tr.final_target() / hb_eps) << "\n";
      return kExitOk;
    }

    if (hf->parsed()) {
      ArtifactDir dir(out_dir);
      const SpinSystem sys = system ? *system : hyperfine_system(hf_params);
      dir.write("transitions.csv", transitions_to_csv(transition_table(sys)));
      OptimizerConfig cfg = hf_flags.config(seed);
      const Operator goal = parse_target(hf_target, sys.size());
      const std::size_t rank = single_transition_rank(sys, cfg.hamiltonian);
      if (!fully_controllable(rank, 4)) {
        dir.write_json("controllability.json", {{"rank", rank}, {"full_rank", 15}, {"controllable", false}});
        dir.finish("hyperfine", seed, elapsed());
        throw UncontrollableSystem(rank, 15);
      }
      const OptimizerResult r = single_transition_gate(sys, goal, cfg);
      cfg.channels = r.controls.channels();
      dir.write_json("controllability.json", {{"rank", rank}, {"full_rank", 15}, {"controllable", true}});
      system = sys;
      write_run(dir, cfg, RobustnessEnsemble::nominal(), r.controls, r.trace, r.fitness, r.iterations, r.restarts,
                r.status, goal);
      dir.finish("hyperfine", seed, elapsed());
      return kExitOk;
    }

    if (ct->parsed()) {
      const HamiltonianMode mode = parse_mode(ct_mode);
      std::size_t rank = 0;
      if (ct_single) {
        rank = single_transition_rank(*system, mode);
      } else {
        std::vector<ControlChannel> channels;
        for (const auto& c : ct_channels) channels.push_back(parse_channel_label(c));
        if (channels.empty()) channels = OptimizerConfig{}.resolved_channels(*system);
        const ControlModel m = make_control_model(*system, channels, mode);
        std::vector<Operator> controls = m.x_controls;
        if (!ct_x_only) controls.insert(controls.end(), m.y_controls.begin(), m.y_controls.end());
        rank = controllability_rank(m.drift, controls);
      }
      const auto dim = static_cast<Eigen::Index>(system->dimension());
      const json result{{"rank", rank},
                        {"full_rank", static_cast<std::size_t>(dim * dim - 1)},
                        {"controllable", fully_controllable(rank, dim)}};
      out << result.dump(2) << "\n";
      if (!out_dir.empty()) {
        ArtifactDir dir(out_dir);
        dir.write_json("controllability.json", result);
        dir.finish("controllability", seed, elapsed());
      }
      return kExitOk;
    }

    if (sw->parsed()) {
      ArtifactDir dir(out_dir);
      if (sw_jobs < 1) throw ConfigError("--jobs must be at least 1");
      const ControlSequence c = controls_from_csv(read_text(sw_controls));
      const Operator goal = parse_target(sw_target, system->size());
      const auto pts = fidelity_sweep(c, *system, goal, parse_grid(sw_rf), parse_grid(sw_offsets),
                                      parse_mode(sw_mode), sw_jobs);
      dir.write("sweep.csv", sweep_to_csv(pts));
      dir.finish("sweep", seed, elapsed());
      return kExitOk;
    }
  } catch (const FormatError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ConfigError& e) {
    err << "invalid input: " << e.what() << "\n";
    for (const auto& d : e.diagnostics())
      if (d.severity == Severity::Warning) err << "warning: " << d.location << ": " << d.message << "\n";
    return kExitValidation;
  } catch (const UncontrollableSystem& e) {
    err << "refused: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InfeasibleCorrection& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace nmrqip::cli
