// Copyright 2026 The cavsense Authors
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

// Drives the qcli binary end to end: exit codes, output files, determinism.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(QCLI_PATH) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("qcli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::string without_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.rfind("# timestamp", 0) != 0) out += line + "\n";
    }
    return out;
  }

  fs::path dir_;
};

TEST_F(Cli, ProtocolSucceeds) {
  const std::string cfg = write("p.json", R"({"n_atoms": 8, "alpha": 4, "chi": 0.1, "tau": 0.5})");
  const Outcome r = run("protocol --config " + cfg);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("delta_beta_sq"), std::string::npos);
  EXPECT_NE(r.out.find("# n_atoms = 8"), std::string::npos);
}

TEST_F(Cli, MissingKeysExitOne) {
  const std::string cfg = write("e.json", "{}");
  const Outcome r = run("protocol --config " + cfg);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("n_atoms"), std::string::npos);
  EXPECT_NE(r.out.find("tau"), std::string::npos);
}

TEST_F(Cli, GammaRejected) {
  const std::string cfg =
      write("g.json", R"({"n_atoms": 8, "alpha": 4, "chi": 0.1, "tau": 0.5, "gamma": 0.1})");
  const Outcome r = run("protocol --config " + cfg);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("spontaneous emission not supported in this version"), std::string::npos);
}

TEST_F(Cli, BadArgumentsExitOne) {
  EXPECT_EQ(run("protocol").code, 1);
  EXPECT_EQ(run("bogus --config " + write("x.json", "{}")).code, 1);
  EXPECT_EQ(run("protocol --config " + (dir_ / "missing.json").string()).code, 1);
  EXPECT_EQ(run("protocol --config " + write("m.json", "{not json")).code, 1);
}

TEST_F(Cli, RuntimeFailureExitTwo) {
  const std::string cfg = write("p.json", R"({"n_atoms": 8, "alpha": 4, "chi": 0.1, "tau": 0.5})");
  const Outcome r = run("protocol --config " + cfg + " --out /nonexistent-dir/out.csv");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("/nonexistent-dir/out.csv"), std::string::npos);
}

TEST_F(Cli, Figure3WritesAllTablesDeterministically) {
  const std::string cfg = write("f.json", "{}");
  const fs::path a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(run("figure3 --config " + cfg + " --out " + a.string()).code, 0);
  ASSERT_EQ(run("figure3 --config " + cfg + " --out " + b.string()).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "a_optimum_vs_n.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a_optimum_vs_kappa.csv"));
  EXPECT_EQ(without_timestamp(slurp(a)), without_timestamp(slurp(b)));
  EXPECT_NE(slurp(a).find("# timestamp = started"), std::string::npos);
}

TEST_F(Cli, KilohertzConversionLogged) {
  const std::string cfg = write(
      "k.json", R"({"n_atoms": 2, "alpha": 2, "chi": 0.1, "tau": 0.2, "kappa_khz": 0.001, "backend": "lindblad"})");
  const Outcome r = run("protocol --config " + cfg + " --format json");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("kappa_khz"), std::string::npos);
  EXPECT_NE(r.out.find("\"metadata\""), std::string::npos);
}

}  // namespace
