#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pdeode/cli.hpp"
#include "support.hpp"

using namespace pdeode;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pdeode_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  std::string config_with(const std::string& id, const std::function<void(nlohmann::json&)>& edit) const {
    nlohmann::json j = nlohmann::json::parse(std::string(*scenarios::find(id)));
    edit(j);
    return write(id + "_edited.json", j.dump(2));
  }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_F(CliTest, EigenTable) {
  const Result r = run_cli({"eigen", "dirichlet", "--n", "4"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("121.9"), std::string::npos);
  EXPECT_NE(r.out.find("M1(N=3) <= 0.08106"), std::string::npos);
}

TEST_F(CliTest, MalformedAngleIsConfigError) {
  const std::string cfg = config_with("dirichlet", [](nlohmann::json& j) { j["plant"]["theta1"] = 2.0; });
  const Result r = run_cli({"eigen", cfg});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("theta1"), std::string::npos);
}

TEST_F(CliTest, ParseErrorsAreConfigErrors) {
  EXPECT_EQ(run_cli({"eigen", write("bad.json", "{ \"plant\": ")}).code, 2);
  const std::string cfg = config_with("dirichlet", [](nlohmann::json& j) { j["ode"]["B"] = {1, 2}; });
  const Result r = run_cli({"certify", cfg, "--n", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ode"), std::string::npos);
  EXPECT_EQ(run_cli({"eigen", "no_such_scenario"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"certify", "dirichlet", "--n", "three"}).code, 2);
}

TEST_F(CliTest, CertifyDirichletN3) {
  const Result r = run_cli({"certify", "dirichlet", "--n", "3", "--out", path("c.json")});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const nlohmann::json j = nlohmann::json::parse(slurp(path("c.json")));
  EXPECT_EQ(j.at("n_modes"), 3);
  EXPECT_EQ(run_cli({"verify", "dirichlet", "--certificate", path("c.json")}).code, 0);
}

TEST_F(CliTest, CertifyNeumannWithRoundedEpsilon) {
  const Result r = run_cli({"certify", "neumann", "--n", "2", "--epsilon", "0.1667", "--out", path("c.json")});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(run_cli({"verify", "neumann", "--certificate", path("c.json")}).code, 0);
  EXPECT_EQ(run_cli({"certify", "neumann", "--n", "2", "--epsilon", "0.9"}).code, 2);
}

TEST_F(CliTest, DecoupledUnstableIsInfeasible) {
  const std::string cfg = std::string(PDEODE_SOURCE_DIR) + "/configs/decoupled_unstable.json";
  const Result r = run_cli({"certify", cfg, "--n", "2", "--out-dir", dir_.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("not found"), std::string::npos);
}

TEST_F(CliTest, CorruptedCertificateFailsVerify) {
  ASSERT_EQ(run_cli({"certify", "dirichlet", "--n", "3", "--out", path("c.json")}).code, 0);
  nlohmann::json j = nlohmann::json::parse(slurp(path("c.json")));
  for (auto& v : j["P"]) v = -v.get<double>();
  write("neg.json", j.dump());
  const Result r = run_cli({"verify", "dirichlet", "--certificate", path("neg.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run_cli({"verify", "neumann", "--certificate", path("c.json")}).code, 1);
  EXPECT_EQ(run_cli({"verify", "dirichlet", "--certificate", write("junk.json", "[1, 2]")}).code, 2);
}

TEST_F(CliTest, SimulateEnvelopeAndCorruptedRate) {
  ASSERT_EQ(run_cli({"certify", "dirichlet", "--n", "9", "--eta", "0.5", "--out", path("c.json")}).code, 0);
  const Result ok = run_cli({"simulate", "dirichlet", "--certificate", path("c.json"), "--out", path("t.csv")});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  EXPECT_NE(ok.out.find("holds"), std::string::npos);
  ASSERT_TRUE(fs::exists(path("t.csv")));
  const nlohmann::json meta = nlohmann::json::parse(slurp(path("t.csv.meta.json")));
  EXPECT_EQ(parse_config(meta.at("config")), test::bundled("dirichlet"));
  EXPECT_EQ(meta.at("certificate").at("n_modes"), 9);

  nlohmann::json j = nlohmann::json::parse(slurp(path("c.json")));
  j["eta"] = 2.0 * j["eta"].get<double>();
  write("fast.json", j.dump());
  const Result bad = run_cli({"simulate", "dirichlet", "--certificate", path("fast.json"), "--out", path("u.csv")});
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.out.find("VIOLATED"), std::string::npos);
}

TEST_F(CliTest, SimulateWithoutCertificate) {
  const Result r = run_cli({"simulate", "neumann", "--t-end", "1", "--out", path("n.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  const nlohmann::json meta = nlohmann::json::parse(slurp(path("n.csv.meta.json")));
  EXPECT_TRUE(meta.at("certificate").is_null());
  EXPECT_EQ(meta.at("samples"), 101);
}

TEST_F(CliTest, DivergenceExitCode) {
  const std::string cfg = config_with("dirichlet", [](nlohmann::json& j) {
    j["ode"]["B"] = {0, 0, 0, 0, 0};
    j["simulate"]["t_end"] = 40;
  });
  const Result r = run_cli({"simulate", cfg, "--out", path("d.csv")});
  EXPECT_EQ(r.code, 4) << r.out << r.err;
  const nlohmann::json meta = nlohmann::json::parse(slurp(path("d.csv.meta.json")));
  EXPECT_TRUE(meta.at("diverged").get<bool>());
}

TEST_F(CliTest, ConfigRoundTrip) {
  for (const char* id : {"dirichlet", "neumann"}) {
    const ScenarioConfig cfg = test::bundled(id);
    EXPECT_EQ(parse_config(to_json(cfg)), cfg);
  }
  const ScenarioConfig v = load_config(std::string(PDEODE_SOURCE_DIR) + "/configs/variable_coefficients.json");
  EXPECT_EQ(parse_config(to_json(v)), v);
}

TEST_F(CliTest, BundledScenariosMatchConfigFiles) {
  for (const char* id : {"dirichlet", "neumann"})
    EXPECT_EQ(slurp(std::string(PDEODE_SOURCE_DIR) + "/configs/" + id + ".json"), std::string(*scenarios::find(id)))
        << id;
}

TEST_F(CliTest, ReproduceIsDeterministic) {
  const Result d1 = run_cli({"reproduce", "dirichlet"});
  const Result n1 = run_cli({"reproduce", "neumann"});
  EXPECT_EQ(d1.code, 0) << d1.out;
  EXPECT_EQ(n1.code, 0) << n1.out;
  EXPECT_NE(d1.out.find("+0.5326"), std::string::npos);
  EXPECT_NE(d1.out.find("+1.046 +0.2471"), std::string::npos);
  EXPECT_NE(n1.out.find("+0.3932"), std::string::npos);
  EXPECT_EQ(run_cli({"reproduce", "dirichlet"}).out, d1.out);
  EXPECT_EQ(run_cli({"reproduce", "neumann"}).out, n1.out);
  EXPECT_EQ(run_cli({"reproduce", "other"}).code, 2);
}
