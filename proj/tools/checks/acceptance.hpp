#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srmpc/config.hpp"

namespace srmpc::checks {

struct CheckResult {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// "[PASS] 3 safety-index contract (0.4 s): detail"
std::string format_line(const CheckResult& r);

// 200 random strictly convex QPs against active-set enumeration; solution
// error <= 1e-5 and KKT residuals <= 1e-4; under 30 s.
CheckResult qp_oracle_equivalence(std::uint64_t seed);

// Dynamics and obstacle-clearance Jacobians against central differences at
// 1000 random points; relative error <= 1e-5; under 10 s.
CheckResult linearization_correctness(std::uint64_t seed);

// Cost floor, non-positive cost under the safe-control condition, zero index
// on the boundary with zero rate and a nonzero control sensitivity of the
// index rate in the same lane; under 5 s.
CheckResult safety_index_contract(std::uint64_t seed);

// Zero-multiplier Lagrangian update equals the PPO update bitwise; policy,
// value and network gradients match finite differences within 1e-4.
CheckResult reduction_identity(std::uint64_t seed);

// Toy CMDP: the Lagrangian learner satisfies the constraint within 200
// iterations, plain PPO does not, and the multipliers classify the states;
// under 2 min.
CheckResult toy_constraint_satisfaction(std::uint64_t seed);

// Blocking slow leader: the shifted reference brakes, the overtaking
// reference passes, and the overtake earns more reward over 50 steps.
CheckResult local_optimum_switching();

// A controller whose policy always fails reproduces LTV-MPC controls bitwise.
CheckResult fallback_equivalence(std::uint64_t seed, int episodes = 20);

struct ExtendedOptions {
  AppConfig config;
  std::filesystem::path work_dir;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  long train_steps = 300000;
  int episodes = 100;
  int workers = 1;
  int window = 20;
};

// Trains PPO and PPO-L-SI for every seed (resuming finished or partial runs
// found in work_dir) and returns the checkpoint directory of each run.
std::filesystem::path run_dir(const ExtendedOptions& opt, std::uint64_t seed, Algorithm algo);
void train_extended(const ExtendedOptions& opt);

// Light-traffic comparison: SRMPC below LTV-MPC and PPO-L-SI in cost rate
// and mean episode cost, above both in mean episode length, in 2 of 3 seeds.
CheckResult table_ordering(const ExtendedOptions& opt);

// Running-mean training cost rate of PPO-L-SI over PPO at the final
// checkpoint is <= 0.75, and lower over the final third, in 2 of 3 seeds.
CheckResult training_safety_trend(const ExtendedOptions& opt);

// Criteria 1-6 and 8.
std::vector<CheckResult> run_ci_tier(std::uint64_t seed);

}  // namespace srmpc::checks
