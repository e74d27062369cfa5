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

// qcli <command> --config <path> [--out <path>] [--format csv|json] [--simulate]
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cavsense/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cavsense::ValidationError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Secondary tables go next to the primary output: out.csv -> out_<name>.csv.
std::string sibling_path(const std::string& primary, const std::string& name) {
  const std::filesystem::path p(primary);
  return (p.parent_path() / (p.stem().string() + "_" + name + p.extension().string())).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cavity displacement-sensing simulator"};
  std::string command, config_path, out_path, format;
  bool simulate = false;
  app.add_option("command", command,
                 "wigner | qfi | protocol | scan_tau | scan_n | scan_kappa | figure3 | validate_engineering")
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--simulate", simulate, "figure3: overlay desk-scale simulations (N <= 32)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    cavsense::ExperimentConfig cfg = cavsense::parse_and_validate(read_file(config_path), command, &std::cerr);
    if (!format.empty()) cfg.format = format;
    if (!out_path.empty()) cfg.out = out_path;
    const cavsense::OutputFormat fmt = cavsense::parse_output_format(cfg.format);

    std::vector<cavsense::ResultTable> tables = cavsense::run_experiment(cfg, simulate);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& t : tables) {
      t.add_metadata("timestamp", "started " + started + " elapsed_s " + cavsense::format_double(elapsed));
    }

    for (size_t i = 0; i < tables.size(); ++i) {
      if (cfg.out.empty()) {
        std::cout << (fmt == cavsense::OutputFormat::csv ? cavsense::to_csv(tables[i]) : cavsense::to_json(tables[i]));
        if (i + 1 < tables.size()) std::cout << '\n';
      } else {
        const std::string path = i == 0 ? cfg.out : sibling_path(cfg.out, tables[i].name());
        cavsense::emit(tables[i], fmt, path);
        std::cerr << "qcli: wrote " << tables[i].rows().size() << " rows to " << path << "\n";
      }
    }
    return 0;
  } catch (const cavsense::ValidationError& e) {
    std::cerr << "qcli: validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qcli: error: " << e.what() << "\n";
    return 2;
  }
}
