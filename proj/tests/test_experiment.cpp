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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cavsense/experiment.hpp"

namespace cavsense {
namespace {

std::string error_of(const std::string& text, const std::optional<std::string>& cmd = std::nullopt) {
  try {
    parse_and_validate(text, cmd);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, CommandNames) {
  for (auto c : {Command::wigner, Command::qfi, Command::protocol, Command::scan_tau, Command::scan_n,
                 Command::scan_kappa, Command::figure3, Command::validate_engineering}) {
    EXPECT_EQ(parse_command(to_string(c)), c);
  }
  EXPECT_THROW(parse_command("explode"), ValidationError);
}

TEST(Config, MissingKeysAreListed) {
  const std::string msg = error_of("{}", "protocol");
  for (const char* k : {"n_atoms", "alpha", "chi", "tau"}) {
    EXPECT_NE(msg.find(k), std::string::npos) << msg;
  }
}

TEST(Config, StrictRejections) {
  const std::string base = R"("n_atoms": 8, "alpha": 4, "chi": 0.1, "tau": 0.5)";
  EXPECT_NE(error_of("{" + base + R"(, "colour": 1})", "protocol").find("colour"), std::string::npos);
  EXPECT_NE(error_of("{" + base + R"(, "gamma": 0.1})", "protocol")
                .find("spontaneous emission not supported in this version"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"n_atoms": "eight", "alpha": 4, "chi": 0.1, "tau": 0.5})", "protocol").find("n_atoms"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"n_atoms": 8, "alpha": -4, "chi": 0.1, "tau": 0.5})", "protocol").find("alpha"),
            std::string::npos);
  EXPECT_FALSE(error_of("{" + base, "protocol").empty());
}

TEST(Config, KilohertzConversionIsLogged) {
  std::ostringstream log;
  const ExperimentConfig c = parse_and_validate(
      R"({"n_atoms": 8, "alpha": 4, "chi": 0.1, "tau": 0.5, "kappa_khz": 15, "backend": "lindblad"})",
      std::string("protocol"), &log);
  EXPECT_NEAR(c.kappa, 2.0 * kPi * 15e3, 1e-9);
  EXPECT_NEAR(c.kappa, 9.4248e4, 0.5);
  EXPECT_NE(log.str().find("kappa"), std::string::npos);
}

TEST(Config, GridObjectsExpand) {
  const ExperimentConfig c = parse_and_validate(
      R"({"n_atoms": 8, "alpha": 4, "chi": 0.1,
          "tau_grid": {"min": 0.1, "max": 10, "points": 3, "spacing": "log"}})",
      std::string("scan_tau"));
  ASSERT_EQ(c.tau_grid.size(), 3u);
  EXPECT_NEAR(c.tau_grid[1], 1.0, 1e-12);
}

TEST(Config, EchoCoversKeys) {
  const ExperimentConfig c =
      parse_and_validate(R"({"n_atoms": 8, "alpha": 4, "chi": 0.1, "tau": 0.5})", std::string("protocol"));
  int found = 0;
  for (const auto& [k, v] : c.echo) {
    if (k == "n_atoms" || k == "chi" || k == "lindblad_rtol") ++found;
  }
  EXPECT_EQ(found, 3);
}

TEST(Table, RejectsBadRows) {
  ResultTable t("t", {"a", "b"});
  EXPECT_THROW(t.add_row({1.0}), Error);
  EXPECT_THROW(t.add_row({1.0, std::numeric_limits<double>::infinity()}), Error);
  EXPECT_THROW(t.add_row({std::nan(""), 1.0}), Error);
  t.add_row({1.0, 2.0});
  EXPECT_EQ(t.rows().size(), 1u);
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), Error);
}

TEST(Table, CsvRoundTripIsBitExact) {
  ResultTable t("round", {"x", "y"});
  t.add_metadata("note", "hello");
  t.add_row({0.1, 1.0 / 3.0});
  t.add_row({-1e-300, 6.02214076e23});
  t.add_row({std::nextafter(1.0, 2.0), -0.0});
  const ResultTable back = parse_csv(to_csv(t));
  ASSERT_EQ(back.rows().size(), t.rows().size());
  for (size_t i = 0; i < t.rows().size(); ++i) {
    for (size_t j = 0; j < 2; ++j) EXPECT_EQ(back.rows()[i][j], t.rows()[i][j]);
  }
  EXPECT_EQ(back.meta("note"), "hello");
  EXPECT_EQ(back.name(), "round");
  const ResultTable js = parse_json(to_json(t));
  EXPECT_EQ(js.rows(), t.rows());
  EXPECT_EQ(js.columns(), t.columns());
}

TEST(Table, EmptyTableStillHasHeader) {
  ResultTable t("empty", {"a", "b"});
  t.add_metadata("k", "v");
  const std::string csv = to_csv(t);
  EXPECT_NE(csv.find("# k = v\n"), std::string::npos);
  EXPECT_NE(csv.find("a,b\n"), std::string::npos);
  EXPECT_TRUE(parse_csv(csv).rows().empty());
}

TEST(Table, EmitErrorNamesPath) {
  ResultTable t("x", {"a"});
  const std::string path = "/nonexistent-dir/out.csv";
  try {
    emit(t, OutputFormat::csv, path);
    FAIL() << "emit succeeded";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
  EXPECT_THROW(parse_output_format("xml"), ValidationError);
}

TEST(Table, EmitWritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "cavsense_emit_test.json";
  ResultTable t("x", {"a"});
  t.add_row({2.5});
  emit(t, OutputFormat::json, path.string());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(parse_json(ss.str()).rows()[0][0], 2.5);
  std::filesystem::remove(path);
}

TEST(Figure3, FormulaModeGains) {
  const std::vector<ResultTable> tabs = run_figure3(figure3_defaults());
  ASSERT_GE(tabs.size(), 3u);
  const ResultTable& g = tabs[0];
  EXPECT_EQ(g.columns(), (std::vector<std::string>{"tau_s", "gain_db_kappa0", "gain_db_kappa15", "gain_db_kappa150"}));
  EXPECT_NEAR(std::stod(g.meta("gain_db_opt_kappa15")), 16.5, 0.1);
  EXPECT_NEAR(std::stod(g.meta("gain_db_opt_kappa150")), 9.8, 0.1);
  // Tenfold kappa costs 100^{1/3} in (delta beta)^2.
  EXPECT_NEAR(std::stod(g.meta("gain_db_opt_kappa15")) - std::stod(g.meta("gain_db_opt_kappa150")),
              10.0 * std::log10(std::cbrt(100.0)), 1e-9);
  // Lossless gain grows monotonically inside the ideal validity window.
  const double window = std::stod(g.meta("ideal_validity_tau_s"));
  for (size_t i = 1; i < g.rows().size(); ++i) {
    if (g.rows()[i][0] > window) break;
    EXPECT_GT(g.rows()[i][1], g.rows()[i - 1][1]);
  }
}

TEST(Figure3, AlphaIndependenceOfOptimum) {
  const std::vector<ResultTable> tabs = run_figure3(figure3_defaults());
  const ResultTable* vk = nullptr;
  for (const auto& t : tabs) {
    if (t.name() == "optimum_vs_kappa") vk = &t;
  }
  ASSERT_NE(vk, nullptr);
  const size_t col = vk->column("alpha_independence_rel");
  for (const auto& row : vk->rows()) EXPECT_LE(row[col], 1e-12);
}

TEST(Experiment, DeterministicOutput) {
  const ExperimentConfig c = parse_and_validate(
      R"({"n_atoms": 4, "alpha": 3, "chi": 0.1, "tau_grid": [0.3, 0.6]})", std::string("scan_tau"));
  EXPECT_EQ(to_csv(run_experiment(c)[0]), to_csv(run_experiment(c)[0]));
}

TEST(Experiment, RejectsOversizedSimulateOverlay) {
  ExperimentConfig c = figure3_defaults();
  c.simulate_spec = SimulateSpec{};
  c.simulate_spec->n_atoms = 64;
  EXPECT_THROW(run_figure3(c, true), ValidationError);
}

}  // namespace
}  // namespace cavsense
