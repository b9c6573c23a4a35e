// Command-line front end: train, evaluate, run, qp-regress, selftest.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "acceptance.hpp"
#include "srmpc/bench.hpp"
#include "srmpc/checkpoint.hpp"
#include "srmpc/config.hpp"
#include "srmpc/error.hpp"
#include "srmpc/qp_io.hpp"

namespace fs = std::filesystem;
using namespace srmpc;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string density;
};

void add_common(CLI::App* cmd, Common& c, bool with_density = true) {
  cmd->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "base random seed");
  if (with_density) cmd->add_option("--density", c.density, "light or dense; overrides the config");
}

AppConfig resolve(const Common& c) {
  std::optional<TrafficDensity> density;
  if (!c.density.empty()) {
    try {
      density = parse_density(c.density);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  return c.config.empty() ? parse_config("", density) : load_config(c.config, density);
}

std::shared_ptr<const DrivingPolicy> policy_for(ControllerKind kind, const std::map<ControllerKind, std::string>& paths) {
  if (!needs_policy(kind)) return nullptr;
  const auto it = paths.find(kind);
  if (it == paths.end() || it->second.empty()) {
    throw ConfigError(fmt::format("controller {} needs a checkpoint", to_string(kind)));
  }
  return load_driving_policy(it->second);
}

int cmd_train(const Common& common, const std::string& algo, const std::string& out, bool resume, long steps) {
  AppConfig cfg = resolve(common);
  TrainConfig train = cfg.train;
  if (!algo.empty()) train.algorithm = parse_algorithm(algo);
  train.seed = common.seed;
  if (steps > 0) train.total_steps = steps;
  train.validate();
  const Scenario sc = cfg.scenario;
  const auto curve = srmpc::train([sc] { return std::make_unique<HighwayCmdp>(sc); }, train, out, resume);
  if (!curve.empty()) {
    const CurveRow& last = curve.back();
    fmt::print("{} iterations, {} steps, J_r {:.3f}, rho_c {:.5f}, mean lambda {:.3f}\n", last.iteration, last.steps,
               last.episodic_return, last.cost_rate, last.mean_lambda);
  }
  return 0;
}

int cmd_evaluate(const Common& common, const std::vector<std::string>& controllers,
                 const std::map<ControllerKind, std::string>& checkpoints, int episodes, int workers,
                 const std::string& out, const std::string& trace_dir) {
  const AppConfig cfg = resolve(common);
  EvaluationRequest req;
  for (const auto& name : controllers) {
    const ControllerKind kind = parse_controller(name);
    req.controllers.push_back({kind, policy_for(kind, checkpoints)});
  }
  req.scenario = cfg.scenario;
  req.ocp = cfg.mpc;
  req.episodes = episodes;
  req.seed = common.seed;
  req.workers = workers;
  req.config_hash = app_config_hash(cfg);
  req.trace_dir = trace_dir;
  const AggregateReport report = evaluate(req);
  write_report(out, report);
  std::cout << report_csv(report);
  return 0;
}

int cmd_run(const Common& common, const std::string& controller, const std::string& checkpoint,
            const std::string& trace) {
  const AppConfig cfg = resolve(common);
  const ControllerKind kind = parse_controller(controller);
  const ControllerSpec spec{kind, policy_for(kind, {{kind, checkpoint}})};
  const EpisodeRecord rec = run_episode(spec, cfg.scenario, cfg.mpc, common.seed);
  if (!trace.empty()) write_trace(trace, rec);
  if (!rec.ok()) {
    std::cerr << "episode aborted: " << rec.error << "\n";
    return 1;
  }
  std::cout << metrics_to_json(rec.metrics).dump() << "\n";
  return 0;
}

// Largest ratio of a KKT residual to the solver's stopping threshold
// eps_abs + eps_rel * (magnitude of the balanced terms); <= 1 passes.
double kkt_ratio(const QpProblem& p, const QpSolution& s, double eps_abs, double eps_rel) {
  const KktResiduals k = kkt_residuals(p, s.z, s.y);
  const Eigen::VectorXd Az = p.A * s.z;
  const Eigen::VectorXd Hz = p.H * s.z;
  const Eigen::VectorXd Aty = p.A.transpose() * s.y;
  const auto norm = [](const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; };
  const double primal_scale = norm(Az);
  const double dual_scale = std::max({norm(Hz), norm(p.g), norm(Aty)});
  return std::max(k.primal / (eps_abs + eps_rel * primal_scale), k.dual / (eps_abs + eps_rel * dual_scale));
}

// Cold re-solve of every problem of a corpus. A problem passes when the
// solver converges and its KKT residuals meet the stopping rule, at the
// configured tolerance unless one is given. The objective change against
// stored solutions is reported, not checked.
int cmd_qp_regress(const Common& common, const std::string& corpus, double tolerance, int capture) {
  AppConfig cfg = resolve(common);
  if (tolerance > 0.0) cfg.mpc.qp.eps_abs = cfg.mpc.qp.eps_rel = tolerance;
  const double eps_abs = cfg.mpc.qp.eps_abs;
  const double eps_rel = cfg.mpc.qp.eps_rel;
  if (capture > 0) {
    fs::create_directories(corpus);
    cfg.mpc.dump_dir = corpus;
    for (int k = 0; k < capture; ++k) {
      run_episode({ControllerKind::Mpc, nullptr}, cfg.scenario, cfg.mpc, episode_seed(common.seed, k));
    }
  }
  const auto files = list_qp_corpus(corpus);
  if (files.empty()) throw ConfigError("empty QP corpus: " + corpus);
  int failed = 0;
  long iterations = 0;
  double worst_change = 0.0;
  for (const auto& path : files) {
    const QpRecord rec = load_qp(path);
    const QpSolution sol = solve(rec.problem, cfg.mpc.qp);
    iterations += sol.iterations;
    const double ratio = kkt_ratio(rec.problem, sol, eps_abs, eps_rel);
    if (rec.solution && rec.solution->z.size() == sol.z.size()) {
      const double ref = rec.problem.objective(rec.solution->z);
      worst_change = std::max(worst_change, std::abs(rec.problem.objective(sol.z) - ref) / std::max(1.0, std::abs(ref)));
    }
    if (sol.status != QpStatus::Solved || ratio > 1.0) {
      ++failed;
      std::cout << fmt::format("FAIL {}: status {}, residual / threshold {:.2f}\n", path.filename().string(),
                               to_string(sol.status), ratio);
    }
  }
  std::cout << fmt::format("{} / {} problems pass (eps_abs {:.1e}, eps_rel {:.1e}), {:.0f} iterations on average, "
                           "largest relative objective change {:.2e}\n",
                           files.size() - static_cast<std::size_t>(failed), files.size(), eps_abs, eps_rel,
                           static_cast<double>(iterations) / static_cast<double>(files.size()), worst_change);
  return failed == 0 ? 0 : 1;
}

int cmd_selftest(const Common& common) {
  bool all = true;
  for (const auto& r : checks::run_ci_tier(common.seed)) {
    std::cout << checks::format_line(r) << std::endl;
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe reinforced MPC for highway driving"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  Common common;

  auto* train = app.add_subcommand("train", "train PPO or PPO-L-SI on the highway environment");
  add_common(train, common);
  std::string algo;
  std::string train_out;
  bool resume = false;
  long steps = 0;
  train->add_option("--algo", algo, "ppo or ppo-l-si (default from config)");
  train->add_option("--out", train_out, "run directory")->required();
  train->add_flag("--resume", resume, "continue from <out>/checkpoint.json");
  train->add_option("--steps", steps, "total environment steps (default from config)");

  auto* eval = app.add_subcommand("evaluate", "seed-paired comparison of controllers");
  add_common(eval, common);
  std::vector<std::string> controllers{"mpc", "ppo", "ppo-l-si", "srmpc"};
  std::map<ControllerKind, std::string> checkpoints;
  int episodes = 100;
  int workers = 1;
  std::string eval_out;
  std::string trace_dir;
  eval->add_option("--controllers", controllers, "mpc, ppo, ppo-l-si, srmpc")->delimiter(',');
  eval->add_option("--ppo-checkpoint", checkpoints[ControllerKind::Ppo], "checkpoint for ppo");
  eval->add_option("--lagrangian-checkpoint", checkpoints[ControllerKind::PpoLagrangian], "checkpoint for ppo-l-si");
  eval->add_option("--srmpc-checkpoint", checkpoints[ControllerKind::Srmpc], "checkpoint guiding srmpc");
  eval->add_option("--episodes", episodes, "episodes per controller")->check(CLI::PositiveNumber);
  eval->add_option("--workers", workers, "parallel episodes")->check(CLI::PositiveNumber);
  eval->add_option("--out", eval_out, "report path (.json; a .csv is written alongside)")->required();
  eval->add_option("--trace-dir", trace_dir, "write every episode trace here");

  auto* run = app.add_subcommand("run", "one episode with a trace dump");
  add_common(run, common);
  std::string controller = "srmpc";
  std::string checkpoint;
  std::string trace;
  run->add_option("--controller", controller, "mpc, ppo, ppo-l-si or srmpc");
  run->add_option("--checkpoint", checkpoint, "policy checkpoint");
  run->add_option("--trace", trace, "JSON-lines trace output");

  auto* regress = app.add_subcommand("qp-regress", "re-solve a QP corpus");
  add_common(regress, common);
  std::string corpus;
  double tolerance = 0.0;
  int capture = 0;
  regress->add_option("--corpus", corpus, "directory of QP JSON files")->required();
  regress->add_option("--tolerance", tolerance, "absolute and relative stopping tolerance (default from [mpc])");
  regress->add_option("--capture", capture, "first record the QPs of this many MPC episodes");

  auto* selftest = app.add_subcommand("selftest", "property and acceptance checks of the CI tier");
  add_common(selftest, common, false);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train) return cmd_train(common, algo, train_out, resume, steps);
    if (*eval) return cmd_evaluate(common, controllers, checkpoints, episodes, workers, eval_out, trace_dir);
    if (*run) return cmd_run(common, controller, checkpoint, trace);
    if (*regress) return cmd_qp_regress(common, corpus, tolerance, capture);
    if (*selftest) return cmd_selftest(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
