#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;

namespace {

const char* kTrauma =
    "x_severity,x_dose,y_1,y_2,y_3,y_4,y_5\n"
    "0,1,21,6,25,33,16\n0,2,20,9,24,29,19\n0,3,18,8,25,28,21\n0,4,14,7,24,31,24\n"
    "1,1,35,9,24,21,11\n1,2,33,9,26,22,10\n1,3,30,10,23,25,12\n1,4,26,8,26,26,14\n";

const char* kModel =
    R"("model": {"family": "cumulative", "links": "logit"},
       "design": {"structure": "po", "predictors_common": ["severity", "dose"]})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mlm_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("trauma.csv", kTrauma);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& body) const {
    std::ofstream(dir_ / name) << body;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  std::string config(const std::string& extra) const {
    return "{\"data\": {\"path\": \"" + path("trauma.csv") + "\"}, " + kModel +
           (extra.empty() ? "" : ", " + extra) + "}";
  }

  int run(std::vector<std::string> args) {
    std::vector<const char*> argv{"mlm"};
    for (const auto& a : args) argv.push_back(a.c_str());
    err_.str("");
    return mlm::cli::run(static_cast<int>(argv.size()), argv.data(), err_);
  }

  int run_with(const std::string& cmd, const std::string& cfg, const std::string& out,
               std::vector<std::string> extra = {}) {
    write(out + ".json", cfg);
    std::vector<std::string> args{cmd, "--config", path(out + ".json"), "--out", path(out)};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  std::map<std::string, std::string> kv(const std::string& out) const {
    std::map<std::string, std::string> m;
    std::istringstream in(read(out + "/result.kv"));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
  }

  fs::path dir_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(Cli, FitWritesReports) {
  ASSERT_EQ(run_with("fit", config(""), "out"), 0) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "out/report.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "out/trace.csv"));
  const auto m = kv("out");
  EXPECT_EQ(m.at("command"), "fit");
  EXPECT_EQ(m.at("converged"), "true");
  EXPECT_EQ(m.at("p"), "6");
  EXPECT_EQ(m.at("n"), "802");
  int slopes = 0;
  for (const auto& [k, v] : m) slopes += k.rfind("theta[severity", 0) == 0 || k.rfind("se[severity", 0) == 0;
  EXPECT_EQ(slopes, 2);
  EXPECT_GT(std::stod(m.at("min_fitted")), 0.0);
  for (const auto& e : fs::directory_iterator(dir_ / "out"))
    EXPECT_NE(e.path().extension(), ".tmp");
}

TEST_F(Cli, MalformedCsvFailsWithoutOutput) {
  write("bad.csv", "x_severity,x_dose,y_1,y_2\n0,1,2\n");
  ASSERT_EQ(run_with("fit", config(""), "out", {"--data", path("bad.csv")}), 1);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, NonConvergenceExitsTwoWithReport) {
  ASSERT_EQ(run_with("fit", config(R"("fit": {"max_iter": 1})"), "out"), 2) << err_.str();
  EXPECT_EQ(kv("out").at("converged"), "false");
  EXPECT_TRUE(fs::exists(dir_ / "out/report.txt"));
}

TEST_F(Cli, ConfigErrors) {
  EXPECT_EQ(run_with("fit", config(R"("colour": 1)"), "a"), 1);
  EXPECT_NE(err_.str().find("colour"), std::string::npos) << err_.str();
  EXPECT_EQ(run_with("fit", config(R"("fit": {"epsilon": 1e-6, "tolerance": 2})"), "b"), 1);
  EXPECT_EQ(run_with("fit", "{not json", "c"), 1);
  EXPECT_EQ(run({"fit"}), 1);
  EXPECT_EQ(run({"frobnicate", "--config", "x"}), 1);
  EXPECT_EQ(run_with("fit", config(""), "d", {"--criterion", "hqic"}), 1);
}

TEST_F(Cli, SeedRequired) {
  EXPECT_EQ(run_with("bootstrap", config(R"("bootstrap": {"B": 2})"), "a"), 1);
  EXPECT_NE(err_.str().find("seed"), std::string::npos);
  EXPECT_EQ(run_with("cv", config(""), "b"), 1);
  EXPECT_EQ(run_with("simulate", config(R"("simulate": {"theta": [-1, 0, 1, 2, 0.1, 0.1], "n": 10})"), "c"), 1);
}

TEST_F(Cli, SimulateIsByteIdenticalForOneSeed) {
  const std::string cfg = config(R"("simulate": {"theta": [-1.2, -0.9, 0.2, 1.4, 0.6, -0.1], "n": 100})");
  ASSERT_EQ(run_with("simulate", cfg, "a", {"--seed", "123"}), 0) << err_.str();
  ASSERT_EQ(run_with("simulate", cfg, "b", {"--seed", "123"}), 0);
  ASSERT_EQ(run_with("simulate", cfg, "c", {"--seed", "124"}), 0);
  EXPECT_EQ(read("a/simulated.csv"), read("b/simulated.csv"));
  EXPECT_EQ(read("a/result.kv"), read("b/result.kv"));
  EXPECT_NE(read("a/simulated.csv"), read("c/simulated.csv"));
  EXPECT_EQ(kv("a").at("n"), "800");
}

TEST_F(Cli, SimulateInfeasibleNamesSetting) {
  // Ordered intercepts, but the last dose slope pulls eta_4 below eta_3 at dose 3.
  const std::string cfg = R"({"model": {"family": "cumulative", "J": 5, "links": "logit"},
      "data": {"covariates": ["dose"]},
      "design": {"structure": "npo", "predictors_common": ["dose"]},
      "simulate": {"theta": [-1, 0, 0, 0, 1, 0, 2, -0.5], "settings": [[1], [3]], "n": 10}})";
  ASSERT_EQ(run_with("simulate", cfg, "a", {"--seed", "1"}), 1) << err_.str();
  EXPECT_NE(err_.str().find("setting 2"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(dir_ / "a"));
}

TEST_F(Cli, BootstrapTenFeasibleFits) {
  ASSERT_EQ(run_with("bootstrap", config(R"("bootstrap": {"B": 10})"), "a", {"--seed", "5"}), 0) << err_.str();
  const auto m = kv("a");
  EXPECT_EQ(m.at("B"), "10");
  EXPECT_EQ(m.at("feasible"), "10");
  EXPECT_EQ(m.at("nonpositive"), "0");
  ASSERT_EQ(run_with("bootstrap", config(R"("bootstrap": {"B": 10})"), "b", {"--seed", "5", "--jobs", "3"}), 0);
  EXPECT_EQ(read("a/replicates.csv"), read("b/replicates.csv"));
}

TEST_F(Cli, SelectLinksSingleCandidate) {
  const std::string cfg = config(R"("select": {"mode": "links", "candidate_links": ["probit"]})");
  ASSERT_EQ(run_with("select", cfg, "a"), 0) << err_.str();
  EXPECT_EQ(kv("a").at("candidates"), "1");
  std::istringstream rk(read("a/ranking.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(rk, line)) rows += !line.empty();
  EXPECT_EQ(rows, 2);
}

TEST_F(Cli, SelectMixtureTraceDecreases) {
  const std::string cfg = "{\"data\": {\"path\": \"" + path("trauma.csv") + "\"}, " +
                          R"("model": {"family": "cumulative", "links": "logit"},
      "design": {"structure": "npo", "predictors_common": ["severity", "dose"]},
      "select": {"mode": "mixture"}})";
  ASSERT_EQ(run_with("select", cfg, "a"), 0) << err_.str();
  const auto m = kv("a");
  std::vector<double> path;
  for (int a = 0; m.count("aic_path." + std::to_string(a)); ++a) path.push_back(std::stod(m.at("aic_path." + std::to_string(a))));
  ASSERT_GE(path.size(), 1u);
  for (size_t a = 1; a < path.size(); ++a) EXPECT_LT(path[a], path[a - 1]);
}

TEST_F(Cli, TwoGroupNeedsFourCategories) {
  write("three.csv", "x_w,y_1,y_2,y_3\n1,3,4,5\n2,5,4,3\n");
  const std::string cfg = "{\"data\": {\"path\": \"" + path("three.csv") + "\"}, " +
                          R"("model": {"family": "baseline", "links": "logit"},
      "design": {"structure": "po", "predictors_common": ["w"]},
      "select": {"mode": "two-group"}})";
  EXPECT_EQ(run_with("select", cfg, "a"), 1);
  EXPECT_NE(err_.str().find("J >= 4"), std::string::npos) << err_.str();
}

TEST_F(Cli, CrossValidationDeterministic) {
  ASSERT_EQ(run_with("cv", config(R"("cv": {"folds": 4})"), "a", {"--seed", "9"}), 0) << err_.str();
  ASSERT_EQ(run_with("cv", config(R"("cv": {"folds": 4})"), "b", {"--seed", "9"}), 0);
  EXPECT_EQ(read("a/folds.csv"), read("b/folds.csv"));
  EXPECT_EQ(kv("a").at("observations"), "802");
}
