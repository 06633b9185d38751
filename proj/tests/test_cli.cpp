#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kamest/config.hpp"
#include "kamest/report.hpp"

namespace fs = std::filesystem;
using namespace kamest;

namespace {

const std::string kCli = KAMEST_CLI_PATH;
const std::string kSamples = KAMEST_SAMPLES_DIR;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kamest_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = kCli + " " + args + " --out " + dir_.string() + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  int run_sample(const std::string& ini, const std::string& cmd, const std::string& extra = "") const {
    return run("--config " + kSamples + "/" + ini + " " + extra + " " + cmd);
  }
  json read_json(const std::string& name) const {
    std::ifstream in(dir_ / name);
    return json::parse(in);
  }
  std::string read_text(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, CertifyPasses) {
  ASSERT_EQ(run_sample("free_rotors_certify.ini", "certify"), 0);
  const json j = read_json("certificate.json");
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_NEAR(j["alpha"]["value"].get<double>(), 5.06e-4, 1e-6);
  EXPECT_EQ(j["norms"]["eps_source"], "user");
  EXPECT_TRUE(j.contains("frequency_map"));
  EXPECT_TRUE(j["alpha"].contains("eq"));
}

TEST_F(Cli, CertifyFails) {
  EXPECT_EQ(run_sample("free_rotors_fail.ini", "certify"), 1);
  const json j = read_json("certificate.json");
  EXPECT_FALSE(j["pass"].get<bool>());
  EXPECT_EQ(j["dominant_failure"], "eps_hat");
  EXPECT_NE(read_text("stdout.txt").find("dominant failure factor"), std::string::npos);
}

TEST_F(Cli, SingularHessianExitCode) {
  EXPECT_EQ(run_sample("singular.ini", "certify"), 2);
  EXPECT_NE(read_text("stderr.txt").find("nondegeneracy"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("certify --mode exact"), 64);
  EXPECT_EQ(run("--config " + kSamples + "/free_rotors_certify.ini --set bogus.key=1 certify"), 64);
  EXPECT_EQ(run(""), 64);
}

TEST_F(Cli, ConstraintExitCode) {
  EXPECT_EQ(run_sample("free_rotors_certify.ini", "certify", "--set constants.cstar=0.2"), 3);
}

TEST_F(Cli, Constants) {
  ASSERT_EQ(run_sample("free_rotors_certify.ini", "constants"), 0);
  const json j = read_json("constants.json");
  EXPECT_DOUBLE_EQ(j["constants"]["c0"]["value"].get<double>(), 1.0 / 64.0);
  EXPECT_NEAR(j["constants"]["kappa1"]["value"].get<double>(), 197.392088, 1e-6);
}

TEST_F(Cli, Cover) {
  ASSERT_EQ(run_sample("free_rotors_certify.ini", "cover"), 0);
  const json j = read_json("covering.json");
  EXPECT_DOUBLE_EQ(j["radius"].get<double>(), 1.0 / 128.0);
  EXPECT_LE(j["N"].get<double>(), 16641.0);
  EXPECT_EQ(j["centers"].size(), j["N"].get<std::size_t>());
}

TEST_F(Cli, Invert) {
  ASSERT_EQ(run_sample("cubic_invert.ini", "invert"), 0);
  const json j = read_json("inversion.json");
  ASSERT_EQ(j["targets"].size(), 3u);
  // omega = (p1 + p1^2/2, p2)
  const auto& t0 = j["targets"][0];
  EXPECT_NEAR(t0["p"][0].get<double>(), 0.4, 1e-10);
  EXPECT_NEAR(t0["p"][1].get<double>(), 0.4, 1e-10);
  const double w = j["targets"][1]["omega"][0].get<double>();
  EXPECT_NEAR(j["targets"][1]["p"][0].get<double>(), std::sqrt(1.0 + 2.0 * w) - 1.0, 1e-10);
}

TEST_F(Cli, TorusAndResonance) {
  ASSERT_EQ(run_sample("pendulum_torus.ini", "torus", "--set torus.t_max=100 --set torus.dt=0.01"), 0);
  const json j = read_json("torus.json");
  EXPECT_LT(j["residual"].get<double>(), 1e-10);
  EXPECT_LT(j["conjugacy"]["max_deviation"].get<double>(), 1e-6);
  EXPECT_FALSE(j["certificate_pass"].get<bool>());
  EXPECT_TRUE(j["geometry"].is_string());
  EXPECT_TRUE(fs::exists(dir_ / "torus.txt"));
  EXPECT_EQ(run_sample("resonant_torus.ini", "torus"), 4);
}

TEST_F(Cli, SurveyOverridesAndDeterminism) {
  const std::string extra = "--eps 1e-3,1e-2 --samples 20 --set survey.t_max=100";
  ASSERT_EQ(run_sample("free_rotors_survey.ini", "survey", extra), 0);
  const std::string csv = read_text("survey.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "eps,samples,nontorus_fraction,measure,stderr,bound_C_sqrt_eps,pass");
  EXPECT_NE(csv.find("0.001,20,"), std::string::npos);
  EXPECT_NE(csv.find("0.01,20,"), std::string::npos);
  const json a = read_json("survey.json");
  EXPECT_EQ(a["rows"].size(), 2u);
  EXPECT_TRUE(a["fit"].is_null());
  ASSERT_EQ(run_sample("free_rotors_survey.ini", "survey", extra), 0);
  EXPECT_EQ(read_json("survey.json"), a);
  EXPECT_NE(read_text("stderr.txt").find("warning"), std::string::npos);
}

TEST_F(Cli, EpsOverrideOutsideSurvey) {
  ASSERT_EQ(run_sample("pendulum_certify.ini", "certify", "--eps 1e-13 --set constants.cstar=0.01 --set constants.chat_star=0.4"), 0);
  EXPECT_EQ(run_sample("pendulum_certify.ini", "certify", "--eps 1e-3,1e-2"), 64);
}

TEST(Config, DefaultsAndSections) {
  const auto c = parse_config(
      "seed = 5\n[model]\nfamily = coupled_rotors\neps = 0.02\na = 0.3\n[domain]\nbox = 0, 1; 0, 2\nr0 = 0.5\n"
      "[survey]\neps = 1e-3, 1e-2\nslow_recheck = true\n[torus]\nomega = 0.7, 1.1\n");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.family, "coupled_rotors");
  EXPECT_EQ(c.params.at("eps"), 0.02);
  EXPECT_EQ(c.domain.box.size(), 2u);
  EXPECT_EQ(c.domain.box[1].hi, 2.0);
  EXPECT_EQ(c.domain.r0, 0.5);
  EXPECT_EQ(c.eps_grid, (std::vector<double>{1e-3, 1e-2}));
  EXPECT_TRUE(c.slow_recheck);
  ASSERT_TRUE(c.omega.has_value());
  EXPECT_EQ((*c.omega)(1), 1.1);
  EXPECT_EQ(c.model().n(), 2);
}

TEST(Config, Overrides) {
  const auto c = parse_config("[survey]\nsamples = 10\n", ".", {"survey.samples=30", "norms.mode=sampled"});
  EXPECT_EQ(c.samples, 30u);
  EXPECT_EQ(c.norms.mode, NormMode::sampled);
  EXPECT_THROW(parse_config("", ".", {"nokey"}), ParseError);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("[survey]\nsample = 3\n"), ParseError);
  EXPECT_THROW(parse_config("[nowhere]\nx = 1\n"), ParseError);
  EXPECT_THROW(parse_config("junk = 1\n"), ParseError);
  EXPECT_THROW(parse_config("[domain]\nbox = 0, 1, 2\n"), ParseError);
  EXPECT_THROW(parse_config("[survey]\nsamples = -3\n"), ParseError);
  EXPECT_THROW(validate(parse_config("[survey]\nsamples = 0\n")), ConstraintError);
  EXPECT_THROW(validate(parse_config("[survey]\ndt = 0\n")), ConstraintError);
}

TEST(Config, ModelFileResolvesAgainstConfigDir) {
  const auto c = load_config(kSamples + "/singular.ini");
  EXPECT_EQ(c.family, "user_spec");
  ASSERT_TRUE(c.model_file.has_value());
  EXPECT_TRUE(fs::exists(*c.model_file));
}
