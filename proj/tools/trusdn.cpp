#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "trusdn/bench.hpp"
#include "trusdn/scenario.hpp"

namespace {

// --seed wins, then TRUSDN_SEED, then the fallback.
uint64_t resolve_seed(const std::optional<uint64_t>& flag, uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TRUSDN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw trusdn::ParseError("TRUSDN_SEED is not an integer");
    }
  }
  return fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TruSDN trust-bootstrapping simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<uint64_t> seed_flag;
  auto* run = app.add_subcommand("run", "Run a scenario file and report its assertions");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed_flag, "Override the scenario seed");

  trusdn::BenchConfig bench_cfg;
  std::string mode_str = "psk";
  std::optional<uint64_t> bench_seed_flag;
  auto* bench = app.add_subcommand("bench", "Flow-establishment benchmark");
  bench->add_option("--flows", bench_cfg.flows, "Flows per repeat")->required();
  bench->add_option("--repeats", bench_cfg.repeats, "Independent repeats")
      ->default_val(1);
  bench->add_option("--mode", mode_str, "psk or pk")
      ->check(CLI::IsMember({"psk", "pk"}))
      ->default_val("psk");
  bench->add_option("--csv", bench_cfg.csv_path, "Output CSV path")->required();
  bench->add_option("--seed", bench_seed_flag, "Benchmark seed");

  std::string csv_path;
  auto* summary = app.add_subcommand("summary", "Column statistics for a bench CSV");
  summary->add_option("csv", csv_path, "CSV file produced by bench")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      trusdn::Scenario sc = trusdn::load_scenario_file(scenario_path);
      uint64_t seed = resolve_seed(seed_flag, sc.seed);
      trusdn::ScenarioReport report = trusdn::run_scenario(sc, seed);
      std::cout << "scenario: " << report.name << " (seed " << report.seed << ")\n";
      for (const auto& [name, ok] : report.results)
        std::cout << "  " << (ok ? "pass" : "FAIL") << "  " << name << '\n';
      std::cout << "transcript digest: " << report.transcript_digest << '\n';
      return report.all_passed() ? 0 : 1;
    }
    if (bench->parsed()) {
      bench_cfg.mode = mode_str == "psk" ? trusdn::HandshakeMode::Psk
                                         : trusdn::HandshakeMode::BaselinePk;
      bench_cfg.seed = resolve_seed(bench_seed_flag, 1);
      auto rows = trusdn::cmd_bench(bench_cfg);
      trusdn::write_csv(rows, bench_cfg.csv_path);
      std::cout << rows.size() << " rows written to " << bench_cfg.csv_path << '\n';
      return 0;
    }
    if (summary->parsed()) {
      auto stats = trusdn::summarize_csv(csv_path);
      trusdn::print_summary(stats, std::cout);
      return 0;
    }
  } catch (const trusdn::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const trusdn::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
