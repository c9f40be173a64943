#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "moscap/cli.hpp"

using namespace moscap;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("moscap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    write("p.cfg",
          "kind = mos\nt_ox = 500 nm\narea = 4.14602e-3 cm2\npolarity = p\ndoping = 1e16 per_cm3\n");
    write("thin.cfg",
          "kind = mos\nt_ox = 50 nm\narea = 1e-3 cm2\npolarity = p\ndoping = 5e15 per_cm3\n");
    write("mim.cfg", "kind = mim\nt_ox = 500 nm\narea = 2.31783e-3 cm2\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) {
    io::write_file_atomic(dir_ / name, text);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, JunctionDepthFromMarkers) {
  const auto r = run({"extract", "junction", "0.65", "1.25", "1.45"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.8 um\n");
  EXPECT_TRUE(r.err.empty());
}

TEST_F(CliTest, ModelPrintsCalibratedOxideCapacitance) {
  const auto r = run({"model", path("p.cfg")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("C_ox = 2.862e-11 F"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("V_fb = -0.9 V"), std::string::npos);
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  const auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage:"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"model"}).code, 1);
}

TEST_F(CliTest, HelpGoesToStdout) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sweep"), std::string::npos);
}

TEST_F(CliTest, MissingFileIsNotFound) {
  const auto r = run({"model", path("absent.cfg")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, BadConfigIsParseError) {
  write("bad.cfg", "kind = mos\nt_ox = 500 furlongs\n");
  const auto r = run({"model", path("bad.cfg")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidPhysicalInputExitsThree) {
  const auto r = run({"extract", "doping", "--cox", "20pF", "--cmin", "30pF", "--area", "1e-3"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, SweepStdoutIsCleanCsv) {
  const auto r = run({"sweep", path("thin.cfg"), "--noise", "0.05pF", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto curve = io::parse_cv_csv(r.out);
  EXPECT_EQ(curve.size(), 101u);
  // Defaults echoed only with --verbose.
  EXPECT_TRUE(r.err.empty());
  const auto v = run({"-v", "sweep", path("thin.cfg")});
  EXPECT_NE(v.err.find("default:"), std::string::npos);
  EXPECT_NO_THROW((void)io::parse_cv_csv(v.out));
}

TEST_F(CliTest, SweepIsDeterministicPerSeed) {
  const auto a = run({"sweep", path("thin.cfg"), "--noise", "0.05pF", "--seed", "11"});
  const auto b = run({"sweep", path("thin.cfg"), "--noise", "0.05pF", "--seed", "11"});
  const auto c = run({"sweep", path("thin.cfg"), "--noise", "0.05pF", "--seed", "12"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST_F(CliTest, OutFilesAreReReadable) {
  ASSERT_EQ(run({"sweep", path("thin.cfg"), "--step", "0.05", "-o", path("cv.csv")}).code, 0);
  const auto curve = io::parse_cv_csv(io::read_file(dir_ / "cv.csv"));
  EXPECT_EQ(curve.size(), 201u);

  const auto cox = run({"extract", "cox", path("cv.csv")});
  EXPECT_EQ(cox.code, 0) << cox.err;
  EXPECT_EQ(cox.out.rfind("C_ox = ", 0), 0u);

  ASSERT_EQ(run({"fit", path("cv.csv"), "--stack", path("thin.cfg"), "--free", "t_ox,doping", "-o",
                 path("fit.txt")}).code,
            0);
  const auto res = io::parse_extraction_result(io::read_file(dir_ / "fit.txt"));
  EXPECT_NEAR(res.t_ox, 50.0, 0.05);
  EXPECT_TRUE(res.converged);

  ASSERT_EQ(run({"plot", path("cv.csv"), "-l", "50 nm", "-o", path("cv.svg")}).code, 0);
  const auto svg = io::read_file(dir_ / "cv.svg");
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find(">50 nm<"), std::string::npos);
}

TEST_F(CliTest, FitIterationLimitExitsTwo) {
  ASSERT_EQ(run({"sweep", path("thin.cfg"), "-o", path("cv.csv")}).code, 0);
  write("guess.cfg",
        "kind = mos\nt_ox = 80 nm\narea = 1e-3 cm2\npolarity = p\ndoping = 1e17 per_cm3\n");
  const auto r = run({"fit", path("cv.csv"), "--stack", path("guess.cfg"), "--free", "t_ox,doping",
                      "--max-iter", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("converged = false"), std::string::npos) << r.out;
}

TEST_F(CliTest, FitRejectsDopingOnMim) {
  ASSERT_EQ(run({"sweep", path("mim.cfg"), "-o", path("cv.csv")}).code, 0);
  const auto r = run({"fit", path("cv.csv"), "--stack", path("mim.cfg"), "--free", "doping"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, ExtractToxAndArea) {
  const auto t = run({"extract", "tox", "--cox", "28.62pF", "--area", "4.14602e-3cm2"});
  EXPECT_EQ(t.code, 0);
  EXPECT_EQ(t.out.rfind("t_ox = 500", 0), 0u) << t.out;
  const auto a = run({"extract", "area", "--cox", "28.62pF", "--tox", "500nm"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, "area = 4.14602347e-03 cm2\n");
}

TEST_F(CliTest, ProfileAndJunctionFromProfile) {
  ASSERT_EQ(run({"sweep", path("thin.cfg"), "--regime", "dd", "--start", "0", "--stop", "5",
                 "-o", path("dd.csv")}).code,
            0);
  const auto r = run({"extract", "profile", path("dd.csv"), "--area", "1e-3", "--cox", "69.03pF"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto prof = io::parse_profile_csv(r.out);
  ASSERT_GT(prof.points.size(), 10u);
  EXPECT_NEAR(prof.points[prof.points.size() / 2].concentration, 5e15, 5e13);
}

TEST_F(CliTest, ReferenceReport) {
  const auto r = run({"reference"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("series,thickness_nm,paper_pF,model_pF,deviation_pct\n", 0), 0u);
  EXPECT_NE(r.out.find("al_p_plus,300,47.00,47.70,1.5"), std::string::npos) << r.out;
  EXPECT_EQ(run({"reference", "nope"}).code, 1);
  const auto stack = run({"reference", "metal1_metal2", "--stack"});
  EXPECT_EQ(io::parse_stack_config(stack.out).stack.kind, StackKind::metal_insulator_metal);
}

TEST_F(CliTest, ColorOnlyWhenAllowedAndNotDisabled) {
  std::ostringstream out, err;
  ::setenv("MOSCAP_NO_COLOR", "1", 1);
  cli::run({"model", path("absent.cfg")}, out, err, true);
  EXPECT_EQ(err.str().find('\x1b'), std::string::npos);
  ::unsetenv("MOSCAP_NO_COLOR");
  std::ostringstream out2, err2;
  cli::run({"model", path("absent.cfg")}, out2, err2, true);
  EXPECT_NE(err2.str().find('\x1b'), std::string::npos);
}

#ifdef MOSCAP_CLI_PATH
TEST_F(CliTest, BinaryExitStatus) {
  const std::string bin = MOSCAP_CLI_PATH;
  EXPECT_EQ(std::system((bin + " extract junction 0.65 1.25 1.45 > /dev/null").c_str()), 0);
  const int rc = std::system((bin + " bogus > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 1);
}
#endif
