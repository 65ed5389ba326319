#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kBin = KDIST_BIN;
const std::string kConfigs = KDIST_CONFIGS;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kdist_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of `kdist <args>`; stdout goes to out.txt in the temp dir.
  int run(const std::string& args) {
    std::string cmd = kBin + " " + args + " > " + path("out.txt") + " 2> " +
                      path("err.txt");
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

const std::string demo = " --set " + kConfigs + "/demo1.set --n 12";

}  // namespace

TEST_F(Cli, CertifyCompressDistinguish) {
  ASSERT_EQ(run("certify" + demo + " --out " + path("c.cert")), 0) << slurp("err.txt");
  ASSERT_EQ(run("compress" + demo + " --cert " + path("c.cert") +
                " --x 000000000111 --out " + path("r.rec")),
            0)
      << slurp("err.txt");
  EXPECT_EQ(run("distinguish" + demo + " --record " + path("r.rec") + " --y 000000000111"), 0);
  EXPECT_EQ(slurp("out.txt"), "ACCEPT\n");
  EXPECT_NE(slurp("err.txt").find("oracle_queries=1"), std::string::npos);
  // sibling member
  EXPECT_EQ(run("distinguish" + demo + " --record " + path("r.rec") + " --y 000000001011"), 1);
  EXPECT_EQ(slurp("out.txt"), "REJECT\n");
  // non-member
  EXPECT_EQ(run("distinguish" + demo + " --record " + path("r.rec") + " --y 000000000011"), 1);
}

TEST_F(Cli, CorruptRecordIsDecodeError) {
  std::ofstream(path("bad.rec")) << "kdist-record 1\nn 12\nr 4\nk 11\nmode oracle\n"
                                    "set_spec_hash 0\nfallback 0\npayload 3:e\n";
  EXPECT_EQ(run("distinguish" + demo + " --record " + path("bad.rec") + " --y 000000000111"), 5);
}

TEST_F(Cli, KZeroCertifiesImmediately) {
  EXPECT_EQ(run("certify --set " + kConfigs + "/demo1.set --n 2"), 0);
  EXPECT_NE(slurp("out.txt").find("certified 1"), std::string::npos);
}

TEST_F(Cli, AllBadLookupWarnsButSucceeds) {
  std::string zeros(460, '0');
  std::ofstream(path("bad.h")) << "kind lookup\nsigma_bits 1\noutput_bits 460\n"
                               << "entry 0 " << zeros << "\nentry 1 " << zeros << "\n";
  EXPECT_EQ(run("certify" + demo + " --h-spec " + path("bad.h")), 0);
  EXPECT_NE(slurp("out.txt").find("fallback 1"), std::string::npos);
  EXPECT_NE(slurp("err.txt").find("warning"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("certify --set /nonexistent --n 4"), 2);
  EXPECT_EQ(run("certify" + demo + " --design greedy"), 3);
  EXPECT_EQ(run("suite --trials 0"), 2);
  EXPECT_EQ(run("certify" + demo + " --bogus"), 2);
  EXPECT_EQ(run("compress" + demo + " --cert " + path("missing") + " --x 000000000111"), 2);
}

TEST_F(Cli, SuiteReportIsReproducible) {
  ASSERT_EQ(run("suite --only 5 6 --out " + path("a.txt")), 0);
  ASSERT_EQ(run("suite --only 5 6 --out " + path("b.txt")), 0);
  EXPECT_EQ(slurp("a.txt"), slurp("b.txt"));
  EXPECT_NE(slurp("a.txt").find("suite PASS"), std::string::npos);
}
