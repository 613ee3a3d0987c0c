// End-to-end checks of the command-line tool: exit codes, emitted files,
// and byte-identical reruns. The binary path and preset directory come in
// through compile definitions.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef BIFTUNE_CLI_PATH
#error "BIFTUNE_CLI_PATH must be defined"
#endif
#ifndef BIFTUNE_PRESET_DIR
#error "BIFTUNE_PRESET_DIR must be defined"
#endif

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("biftune_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CommandResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(BIFTUNE_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  CommandResult res;
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

std::string preset(const std::string& name) {
  return std::string(BIFTUNE_PRESET_DIR) + "/" + name;
}

TEST(Cli, SimulateEmitsDeterministicArtifacts) {
  const auto dir1 = scratch_dir("sim1");
  const auto dir2 = scratch_dir("sim2");
  const auto r1 = run_cli("--outdir " + dir1.string() + " simulate " +
                          preset("neural-integrator.toml"), dir1);
  ASSERT_EQ(r1.exit_code, 0) << r1.err;
  const auto r2 = run_cli("--outdir " + dir2.string() + " simulate " +
                          preset("neural-integrator.toml"), dir2);
  ASSERT_EQ(r2.exit_code, 0) << r2.err;

  const std::string csv1 = slurp(dir1 / "neural-integrator_trajectory.csv");
  const std::string csv2 = slurp(dir2 / "neural-integrator_trajectory.csv");
  ASSERT_FALSE(csv1.empty());
  EXPECT_EQ(csv1, csv2);
  EXPECT_EQ(csv1.substr(0, 6), "t,x,mu");

  const std::string js1 = slurp(dir1 / "neural-integrator_report.json");
  const std::string js2 = slurp(dir2 / "neural-integrator_report.json");
  ASSERT_FALSE(js1.empty());
  EXPECT_EQ(js1, js2);
}

TEST(Cli, ValidationErrorsExitTwo) {
  const auto dir = scratch_dir("bad");
  const fs::path cfg = dir / "bad.toml";
  std::ofstream(cfg) << "[system]\nkind = \"first_order\"\n[initial]\nx = 0.0\n";
  const auto r = run_cli("--outdir " + dir.string() + " simulate " + cfg.string(), dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("code=2"), std::string::npos);
  EXPECT_NE(r.err.find("DomainViolation"), std::string::npos);
}

TEST(Cli, MissingConfigExitTwo) {
  const auto dir = scratch_dir("missing");
  const auto r = run_cli("simulate " + (dir / "nope.toml").string(), dir);
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, EmptySweepListExitTwo) {
  const auto dir = scratch_dir("sweep_empty");
  const auto r = run_cli("--outdir " + dir.string() + " sweep " + preset("hair-cell.toml") +
                         " --param law.a --values ,", dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("code=2"), std::string::npos);
}

TEST(Cli, SweepWritesLongFormCsv) {
  const auto dir = scratch_dir("sweep");
  const auto r = run_cli("--outdir " + dir.string() + " sweep " + preset("hair-cell.toml") +
                         " --param law.a --values 0.5,1.0", dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string csv = slurp(dir / "hair-cell_sweep.csv");
  EXPECT_NE(csv.find("param,value,status"), std::string::npos);
  EXPECT_NE(csv.find("law.a,0.5,ok"), std::string::npos);
  EXPECT_NE(csv.find("law.a,1,ok"), std::string::npos);
}

TEST(Cli, AnalyzeSectorAndLinearize) {
  const auto dir = scratch_dir("analyze");
  const auto r1 = run_cli("--outdir " + dir.string() + " analyze " +
                          preset("neural-integrator.toml") + " --what sector", dir);
  ASSERT_EQ(r1.exit_code, 0) << r1.err;
  EXPECT_TRUE(fs::exists(dir / "neural-integrator_analyze_sector.json"));

  const auto r2 = run_cli("--outdir " + dir.string() + " analyze " +
                          preset("neural-integrator.toml") + " --what linearize", dir);
  ASSERT_EQ(r2.exit_code, 0) << r2.err;
  const std::string js = slurp(dir / "neural-integrator_analyze_linearize.json");
  EXPECT_NE(js.find("\"eigenvalues\""), std::string::npos);

  // floquet on a first-order scenario is a validation error
  const auto r3 = run_cli("--outdir " + dir.string() + " analyze " +
                          preset("neural-integrator.toml") + " --what floquet", dir);
  EXPECT_EQ(r3.exit_code, 2);
}

TEST(Cli, CertifyPracticalSmallBudget) {
  const auto dir = scratch_dir("certify");
  const auto r = run_cli("--outdir " + dir.string() + " certify " +
                             preset("perturbed-integrator.toml") +
                             " --definition practical --u2-radius 0.05 --epsilons 1e-3 "
                             "--horizon 50 --points 6 --shells 2 --start-times 2",
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string js = slurp(dir / "perturbed-integrator_verdict.json");
  EXPECT_NE(js.find("\"outcome\": \"not_falsified\""), std::string::npos);
  EXPECT_NE(r.out.find("not falsified"), std::string::npos);
}

TEST(Cli, GainCurveWritesCsv) {
  const auto dir = scratch_dir("gain");
  const auto r = run_cli("--outdir " + dir.string() + " gain-curve " +
                             preset("hair-cell-forced.toml") + " --amplitudes 0.01,0.02",
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string csv = slurp(dir / "hair-cell-forced_gain.csv");
  EXPECT_NE(csv.find("forcing_amplitude,response_amplitude"), std::string::npos);
}

TEST(Cli, SeedOverrideLandsInReport) {
  const auto dir = scratch_dir("seed");
  const auto r = run_cli("--outdir " + dir.string() + " --seed 777 simulate " +
                             preset("neural-integrator.toml"),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string js = slurp(dir / "neural-integrator_report.json");
  EXPECT_NE(js.find("\"seed\": 777"), std::string::npos);
}

}  // namespace
