// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "acceptance.hpp"

using namespace srmpc;

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string tier = "ci";
  std::uint64_t seed = 0;
  std::string config;
  std::string work_dir = "acceptance_work";
  checks::ExtendedOptions opt;
  std::vector<int> only;
  app.add_option("--tier", tier, "ci or extended")->check(CLI::IsMember({"ci", "extended"}));
  app.add_option("--seed", seed, "seed of the CI checks");
  app.add_option("--config", config, "INI config for the extended tier")->check(CLI::ExistingFile);
  app.add_option("--work-dir", work_dir, "training runs and reports of the extended tier");
  app.add_option("--seeds", opt.seeds, "training seeds of the extended tier")->delimiter(',');
  app.add_option("--train-steps", opt.train_steps, "environment steps per training run");
  app.add_option("--episodes", opt.episodes, "evaluation episodes per controller");
  app.add_option("--workers", opt.workers, "parallel evaluation episodes");
  app.add_option("--only", only, "extended criteria to run (7, 9)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  std::vector<checks::CheckResult> results;
  const auto report = [&](checks::CheckResult r) {
    std::cout << checks::format_line(r) << std::endl;
    results.push_back(std::move(r));
  };
  try {
    if (tier == "ci") {
      report(checks::qp_oracle_equivalence(seed));
      report(checks::linearization_correctness(seed));
      report(checks::safety_index_contract(seed));
      report(checks::reduction_identity(seed));
      report(checks::toy_constraint_satisfaction(seed));
      report(checks::local_optimum_switching());
      report(checks::fallback_equivalence(seed));
    } else {
      if (!config.empty()) opt.config = load_config(config);
      opt.work_dir = work_dir;
      spdlog::set_level(spdlog::level::info);
      const auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };
      if (wanted(7)) report(checks::table_ordering(opt));
      if (wanted(9)) report(checks::training_safety_trend(opt));
    }
  } catch (const std::exception& e) {
    std::cout << "[FAIL] aborted: " << e.what() << std::endl;
    return 1;
  }
  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria pass"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
