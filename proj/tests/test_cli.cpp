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

#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace nmrqip;
namespace fs = std::filesystem;

namespace {

const std::string kData = NMRQIP_TEST_DATA;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "nmrqip");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path p = fs::temp_directory_path() / "nmrqip_cli_tests" / info->name() / name;
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) { return json::parse(read_text(p.string())); }

}  // namespace

TEST(Cli, SimulateHalfPulse) {
  const auto dir = scratch("sim");
  const Invocation r = invoke({"simulate", "--system", kData + "/single_h.json", "--pulse", kData + "/half_pulse.json",
                     "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(read_text((dir / "final_state.csv").string()));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "spin,x,y,z");
  std::vector<double> v;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(parse_double(cell));
  ASSERT_EQ(v.size(), 4u);
  EXPECT_NEAR(v[1], 0.0, 1e-9);
  EXPECT_NEAR(v[2], 1.0, 1e-9);
  EXPECT_NEAR(v[3], 0.0, 1e-9);
}

TEST(Cli, HbacIdealRatio) {
  const auto dir = scratch("hbac");
  const Invocation r = invoke({"hbac", "--ideal", "--eps", "1e-5", "--rounds", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = hbac_trace_from_csv(read_text((dir / "trace.csv").string()));
  ASSERT_FALSE(rows.empty());
  const TraceRow& last = rows[rows.size() - 2];  // spin 1 of the final step
  EXPECT_EQ(last.spin, kHbacTarget);
  EXPECT_EQ(last.step, 6u);
  EXPECT_NEAR(last.polarization / 1e-5, 1.5, 1e-9);
}

TEST(Cli, HbacCompiledReportsBothTraces) {
  const auto dir = scratch("hbac");
  const Invocation r = invoke({"hbac", "--compiled", "--loss", "0.015", "--eps", "0.01", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "trace_ideal.csv"));
  EXPECT_TRUE(fs::exists(dir / "trace_compiled.csv"));
  const json res = read_json(dir / "result.json");
  EXPECT_LT(res["compiled_ratio"].get<double>(), res["ideal_ratio"].get<double>());
  EXPECT_EQ(invoke({"hbac", "--ideal", "--loss", "0.1", "--out", dir.string()}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"hbac", "--ideal", "--compiled", "--out", dir.string()}).code, cli::kExitParse);
  EXPECT_EQ(invoke({"hbac", "--rounds", "0", "--out", dir.string()}).code, cli::kExitValidation);
}

TEST(Cli, GrapeIsDeterministic) {
  const std::vector<std::string> base{"grape",       "--system", kData + "/strong_pair.json", "--target",
                                      "cnot:0,1",    "--steps",  "40",                        "--dt",
                                      "25e-6",       "--max-amp-hz", "5000",                  "--iterations",
                                      "15",          "--seed",   "7"};
  auto a = base, b = base;
  const auto da = scratch("a"), db = scratch("b");
  a.insert(a.end(), {"--out", da.string()});
  b.insert(b.end(), {"--out", db.string()});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_EQ(read_text((da / "manifest.json").string()), read_text((db / "manifest.json").string()));
  for (const char* f : {"controls.csv", "run.json"})
    EXPECT_EQ(read_text((da / f).string()), read_text((db / f).string()));
  // Hashes in the manifest describe the files on disk; timing stays outside.
  const json m = read_json(da / "manifest.json");
  for (const auto& f : m["files"]) {
    EXPECT_NE(f["path"], "timing.json");
    EXPECT_EQ(f["sha256"], cli::sha256_hex(read_text((da / f["path"].get<std::string>()).string())));
  }
  EXPECT_TRUE(fs::exists(da / "timing.json"));
}

TEST(Cli, NonConvergenceIsDataNotFailure) {
  const auto dir = scratch("g");
  const Invocation r = invoke({"grape", "--system", kData + "/strong_pair.json", "--target", "cnot:0,1", "--steps", "10",
                     "--dt", "10e-6", "--iterations", "2", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const json run = read_json(dir / "run.json");
  EXPECT_NE(run["status"], "converged");
  EXPECT_EQ(run["trace"].size(), run["iterations"].get<std::size_t>() + 1);
  EXPECT_LE(run["final_fidelity"]["worst_case"].get<double>(), run["final_fidelity"]["average"].get<double>());
  // Exported controls round-trip through their own parser.
  const std::string csv = read_text((dir / "controls.csv").string());
  EXPECT_EQ(controls_to_csv(controls_from_csv(csv)), csv);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("x");
  EXPECT_EQ(invoke({}).code, cli::kExitParse);
  EXPECT_EQ(invoke({"bogus"}).code, cli::kExitParse);
  EXPECT_EQ(invoke({"grape", "--system", kData + "/strong_pair.json", "--target", "cnot:0,1"}).code, cli::kExitParse);
  EXPECT_EQ(invoke({"validate", "--system", kData + "/no_such_file.json"}).code, cli::kExitParse);
  // Malformed file contents are parse errors, bad values validation errors.
  const fs::path bad = scratch("bad.json");
  fs::create_directories(bad.parent_path());
  write_text(bad.string(), "{ \"spins\": [");
  EXPECT_EQ(invoke({"grape", "--system", bad.string(), "--target", "identity", "--out", dir.string()}).code,
            cli::kExitParse);
  EXPECT_EQ(invoke({"grape", "--system", kData + "/asymmetric_j.json", "--target", "identity", "--out", dir.string()}).code,
            cli::kExitValidation);
  EXPECT_EQ(invoke({"grape", "--system", kData + "/strong_pair.json", "--target", "cnot:0,5", "--out", dir.string()}).code,
            cli::kExitValidation);
  EXPECT_EQ(invoke({"grape", "--system", kData + "/strong_pair.json", "--target", "identity", "--dt", "-1", "--out",
                 dir.string()})
                .code,
            cli::kExitValidation);
  EXPECT_EQ(invoke({"compile-cnot", "--system", kData + "/strong_pair.json", "--out", dir.string()}).code,
            cli::kExitValidation);
  const Invocation help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("hbac"), std::string::npos);
}

TEST(Cli, ValidateReportsDiagnostics) {
  Invocation r = invoke({"validate", "--system", kData + "/malonic_carbons.json"});
  EXPECT_EQ(r.code, 0);
  r = invoke({"validate", "--system", kData + "/asymmetric_j.json"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  const json d = json::parse(r.out);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0]["severity"], "error");
  EXPECT_NE(d[0]["message"].get<std::string>().find("(0,1)"), std::string::npos);
  EXPECT_NE(d[0]["message"].get<std::string>().find("(1,0)"), std::string::npos);
  r = invoke({"validate", "--system", kData + "/strong_pair.json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("weak-coupling approximation invalid"), std::string::npos);
}

TEST(Cli, CompileCnotWithCorrection) {
  const auto dir = scratch("cc");
  const Invocation r = invoke({"compile-cnot", "--system", kData + "/pair_weak.json", "--pulse-duration", "10e-6",
                     "--correct", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json res = read_json(dir / "result.json");
  EXPECT_GE(res["certificate"].get<double>(), 1.0 - 1e-9);
  EXPECT_GE(res["corrected_fidelity"].get<double>(), 0.999);
  EXPECT_LT(res["uncorrected_fidelity"].get<double>(), res["corrected_fidelity"].get<double>());
  const std::string pulse = read_text((dir / "pulse.json").string());
  EXPECT_EQ(pulse_sequence_to_json(pulse_sequence_from_json(json::parse(pulse))).dump(2) + "\n", pulse);
  // The stored program reproduces the reported fidelity.
  const PulseSequence seq = pulse_sequence_from_json(json::parse(pulse));
  EXPECT_NEAR(gate_fidelity(sequence_propagator(seq, load_system(kData + "/pair_weak.json")), cnot_gate(0, 1, 2)),
              res["corrected_fidelity"].get<double>(), 1e-12);
}

TEST(Cli, RefocusAndControllability) {
  const auto dir = scratch("rf");
  Invocation r = invoke({"refocus", "--system", kData + "/malonic_carbons.json", "--keep", "0,1", "--tau", "2e-3", "--out",
               dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GE(read_json(dir / "result.json")["fidelity"].get<double>(), 1.0 - 1e-9);
  r = invoke({"controllability", "--system", kData + "/strong_pair.json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["rank"], 15);
}

TEST(Cli, HyperfineRefusalAndTable) {
  const auto dir = scratch("hf");
  Invocation r = invoke({"hyperfine", "--ax-hz", "0", "--out", dir.string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("rank"), std::string::npos);
  EXPECT_FALSE(read_json(dir / "controllability.json")["controllable"].get<bool>());
  r = invoke({"hyperfine", "--iterations", "300", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "transitions.csv"));
  EXPECT_GE(read_json(dir / "run.json")["fitness"].get<double>(), 0.99);
}

TEST(Cli, SweepFromExportedControls) {
  const auto g = scratch("g"), s1 = scratch("s1"), s4 = scratch("s4");
  ASSERT_EQ(invoke({"grape", "--system", kData + "/strong_pair.json", "--target", "cnot:0,1", "--steps", "40", "--dt",
                 "25e-6", "--max-amp-hz", "5000", "--iterations", "20", "--out", g.string()})
                .code,
            0);
  const std::string controls = (g / "controls.csv").string();
  ASSERT_EQ(invoke({"sweep", "--system", kData + "/strong_pair.json", "--controls", controls, "--target", "cnot:0,1",
                 "--out", s1.string()})
                .code,
            0);
  ASSERT_EQ(invoke({"sweep", "--system", kData + "/strong_pair.json", "--controls", controls, "--target", "cnot:0,1",
                 "--jobs", "4", "--out", s4.string()})
                .code,
            0);
  const std::string a = read_text((s1 / "sweep.csv").string());
  EXPECT_EQ(a, read_text((s4 / "sweep.csv").string()));
  EXPECT_EQ(sweep_from_csv(a).size(), 35u);
  EXPECT_EQ(invoke({"sweep", "--system", kData + "/strong_pair.json", "--controls", controls, "--target", "cnot:0,1",
                 "--rf", "1:2", "--out", s1.string()})
                .code,
            cli::kExitParse);
}
