#include "acceptance.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "finite_difference.hpp"
#include "qp_oracle.hpp"
#include "srmpc/bench.hpp"
#include "srmpc/checkpoint.hpp"
#include "srmpc/learner.hpp"
#include "srmpc/safety.hpp"
#include "srmpc/srmpc.hpp"

namespace srmpc::checks {

namespace fs = std::filesystem;
using oracle::fd_jacobian;
using oracle::max_rel_err;

namespace {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

class NanPolicy : public DrivingPolicy {
 public:
  ControlInput act(const World&, const Observation&, const Scenario&) const override {
    return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  }
};

CheckResult finish(int criterion, std::string name, bool passed, std::string detail, const Stopwatch& clock,
                   double budget = 0.0) {
  CheckResult r{criterion, std::move(name), passed, std::move(detail), clock.seconds()};
  if (budget > 0.0 && r.seconds > budget) {
    r.passed = false;
    r.detail += fmt::format("; runtime {:.1f} s over the {:.0f} s budget", r.seconds, budget);
  }
  return r;
}

}  // namespace

std::string format_line(const CheckResult& r) {
  return fmt::format("[{}] criterion {} {} ({:.1f} s): {}", r.passed ? "PASS" : "FAIL", r.criterion, r.name,
                     r.seconds, r.detail);
}

CheckResult qp_oracle_equivalence(std::uint64_t seed) {
  const Stopwatch clock;
  std::mt19937_64 rng(seed);
  double worst_z = 0.0;
  double worst_kkt = 0.0;
  int unsolved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const oracle::DenseQp qp = oracle::random_qp(rng, 6, 8);
    const auto reference = oracle::enumerate_active_sets(qp);
    const QpProblem p = qp.to_problem();
    const QpSolution s = solve(p);
    if (!reference || s.status != QpStatus::Solved) {
      ++unsolved;
      continue;
    }
    worst_z = std::max(worst_z, (s.z - *reference).lpNorm<Eigen::Infinity>());
    const KktResiduals k = kkt_residuals(p, s.z, s.y);
    worst_kkt = std::max({worst_kkt, k.primal, k.dual, k.complementarity});
  }
  const bool ok = unsolved == 0 && worst_z <= 1e-5 && worst_kkt <= 1e-4;
  return finish(1, "QP solver matches active-set enumeration", ok,
                fmt::format("200 QPs, max |z - z*| {:.2e}, max KKT residual {:.2e}, unsolved {}", worst_z, worst_kkt,
                            unsolved),
                clock, 30.0);
}

CheckResult linearization_correctness(std::uint64_t seed) {
  const Stopwatch clock;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const VehicleGeometry geom;
  const Scenario sc = Scenario::light();
  const OcpConfig cfg = OcpConfig::for_scenario(sc);
  double worst_dyn = 0.0;
  double worst_col = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const VehicleState s{100 * uni(rng), 6 + 5 * uni(rng), 0.6 * uni(rng), 20 + 10 * uni(rng)};
    const ControlInput u{0.5 * uni(rng), 4.0 * uni(rng)};
    const LinearizedDynamics lin = linearize_step(s, u, geom, sc.dt);
    const auto fs = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return step(VehicleState::from(x), u, geom, sc.dt).vec();
    };
    const auto fu = [&](const Eigen::VectorXd& c) -> Eigen::VectorXd {
      return step(s, ControlInput::from(c), geom, sc.dt).vec();
    };
    worst_dyn = std::max({worst_dyn, max_rel_err(lin.A, fd_jacobian(fs, s.vec())), max_rel_err(lin.B, fd_jacobian(fu, u.vec()))});
  }
  for (int i = 0; i < 1000; ++i) {
    // Obstacle 2 m to 30 m away in any direction; exponent 2 or 4.
    const VehicleState ego{0.0, 6.0, 0.3 * uni(rng), 25.0};
    const double r = 2.0 + 14.0 * (1.0 + uni(rng));
    const double bearing = 3.14159 * uni(rng);
    const VehicleState obs{r * std::cos(bearing), 6.0 + r * std::sin(bearing), 0.2 * uni(rng), 20.0};
    const double offset = cfg.circle_offsets[static_cast<std::size_t>(i) % cfg.circle_offsets.size()];
    const double exponent = i % 2 ? 4.0 : 2.0;
    const EllipseAxes axes = i % 3 ? cfg.hard_axes() : cfg.soft_axes();
    const Eigen::Vector3d grad = circle_clearance_gradient(ego, offset, obs, axes, exponent);
    const auto f = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
      const VehicleState e{p[0], p[1], p[2], ego.v};
      return Eigen::VectorXd::Constant(1, circle_clearance(e, offset, obs, axes, exponent));
    };
    worst_col = std::max(worst_col, max_rel_err(grad.transpose(), fd_jacobian(f, Eigen::Vector3d(ego.x, ego.y, ego.phi))));
  }
  const bool ok = worst_dyn <= 1e-5 && worst_col <= 1e-5;
  return finish(2, "Jacobians match central differences", ok,
                fmt::format("1000 points each, max rel err dynamics {:.2e}, obstacle clearance {:.2e}", worst_dyn,
                            worst_col),
                clock, 10.0);
}

CheckResult safety_index_contract(std::uint64_t seed) {
  const Stopwatch clock;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phi(-50.0, 50.0);
  std::uniform_real_distribution<double> eta(1e-3, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<std::string> failures;

  long floor_violations = 0;
  long safe_positive = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = phi(rng);
    const double b = phi(rng);
    const double e = eta(rng);
    const double c = si_cost(a, b, e);
    floor_violations += c < kCostFloor;
    safe_positive += is_safe_control(a, b, e) && c > 0.0;
  }
  // The same properties on the signals of simulated transitions.
  const Scenario sc = Scenario::dense();
  HighwayEnv env(sc);
  long transitions = 0;
  for (std::uint64_t ep = 0; ep < 10; ++ep) {
    env.reset(seed + ep);
    while (!env.done()) {
      const StepOutcome out = env.step({0.05 * uni(rng), 3.0 * uni(rng)});
      ++transitions;
      floor_violations += out.safety.cost < kCostFloor;
      safe_positive += is_safe_control(out.safety.phi_s, out.safety.phi_s_next, sc.si.eta) && out.safety.cost > 0.0;
    }
  }
  if (floor_violations) failures.push_back(fmt::format("{} costs below the floor", floor_violations));
  if (safe_positive) failures.push_back(fmt::format("{} positive costs under safe control", safe_positive));

  const SiParams p = sc.si;
  const double boundary = safety_index(p.sigma + p.d_min, 0.0, p);
  if (std::abs(boundary) > 1e-12) failures.push_back(fmt::format("boundary index {}", boundary));

  // Rate of the index under one short control step, differentiated in u.
  const VehicleGeometry& geom = sc.geometry;
  const double h = 1e-3;
  double weakest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    const VehicleState ego{0.0, 2.0 + 0.5 * uni(rng), 0.05 * uni(rng), 25.0 + 5.0 * uni(rng)};
    const double dx = (i % 2 ? 1.0 : -1.0) * (6.0 + 20.0 * (1.0 + uni(rng)));
    const VehicleState other{dx, 2.0 + 0.5 * uni(rng), 0.0, 25.0 + 5.0 * uni(rng)};
    const auto index = [&](const VehicleState& e, const VehicleState& o) {
      const RelativeMotion rel = relative_distance(e, o, geom);
      return safety_index(rel.d, rel.d_dot, p);
    };
    const double phi0 = index(ego, other);
    VehicleState other_next = other;
    other_next.x += other.v * h;
    const auto rate = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
      return Eigen::VectorXd::Constant(1, (index(step(ego, ControlInput::from(u), geom, h), other_next) - phi0) / h);
    };
    const Eigen::MatrixXd J = fd_jacobian(rate, Eigen::Vector2d(0.0, 0.0), 1e-3);
    weakest = std::min(weakest, J.norm());
  }
  if (!(weakest > 1e-3)) failures.push_back(fmt::format("index rate insensitive to control ({:.2e})", weakest));

  std::string detail = fmt::format("1e5 random triples, {} simulated transitions, boundary index {:.1e}, min |d rate/du| {:.3f}",
                                   transitions, boundary, weakest);
  for (const auto& f : failures) detail += "; " + f;
  return finish(3, "safety-index contract", failures.empty(), detail, clock, 5.0);
}

namespace {

Agent toy_agent(Algorithm algo, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.algorithm = algo;
  cfg.seed = seed;
  cfg.batch_steps = 100;
  cfg.minibatch = 25;
  cfg.epochs = 3;
  return Agent::create(ToyCmdp::kStates, ToyCmdp().action_space(), cfg);
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * n01(rng);
  return m;
}

}  // namespace

CheckResult reduction_identity(std::uint64_t seed) {
  const Stopwatch clock;
  std::vector<std::string> failures;

  Agent ppo = toy_agent(Algorithm::Ppo, seed);
  Agent lag = toy_agent(Algorithm::PpoLagrangian, seed);
  ToyCmdp env;
  std::mt19937_64 rng(seed + 1);
  const Batch batch = rollout(env, ppo.policy, 200, rng);
  const BatchAdvantages a1 = estimate_advantages(batch, ppo);
  const BatchAdvantages a2 = estimate_advantages(batch, lag);
  if (a2.lambda.cwiseAbs().maxCoeff() != 0.0) failures.push_back("initial multiplier not zero");
  std::mt19937_64 r1(seed + 2);
  std::mt19937_64 r2(seed + 2);
  ppo_update(batch, a1, ppo, r1);
  ppo_update(batch, a2, lag, r2);
  const bool bitwise = ppo.policy.flat_params() == lag.policy.flat_params() && ppo.value.params() == lag.value.params() &&
                       ppo.cost_value.params() == lag.cost_value.params();
  if (!bitwise) failures.push_back("updates differ");

  std::mt19937_64 g(seed + 3);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    GaussianPolicy p(3, control_box(ControlLimits{}), {5, 4}, -0.5, g);
    p.mean_net().params() += random_matrix(p.mean_net().num_params(), 1, g, 0.3);
    p.log_std() = random_matrix(2, 1, g, 0.3).col(0);
    const Eigen::MatrixXd obs = random_matrix(3, 8, g);
    const Eigen::MatrixXd u = p.mean(obs) + random_matrix(2, 8, g, 0.5);
    const Eigen::VectorXd old = p.log_prob(obs, u) + random_matrix(8, 1, g, 0.3).col(0);
    const Eigen::VectorXd w = random_matrix(8, 1, g).col(0);
    const LossResult r = policy_loss(p, obs, u, old, w, 0.2, 0.01);
    const auto f = [&](const Eigen::VectorXd& params) {
      GaussianPolicy q = p;
      q.set_flat_params(params);
      return Eigen::VectorXd::Constant(1, policy_loss(q, obs, u, old, w, 0.2, 0.01).loss);
    };
    worst = std::max(worst, max_rel_err(r.grad.transpose(), fd_jacobian(f, p.flat_params(), 1e-6)));

    Mlp net({4, 6, 1}, Activation::Tanh);
    net.initialize(g);
    const Eigen::MatrixXd x = random_matrix(4, 8, g);
    const Eigen::VectorXd targets = random_matrix(8, 1, g).col(0);
    const LossResult v = regression_loss(net, x, targets);
    const auto fv = [&](const Eigen::VectorXd& params) {
      Mlp copy = net;
      copy.params() = params;
      return Eigen::VectorXd::Constant(1, regression_loss(copy, x, targets).loss);
    };
    worst = std::max(worst, max_rel_err(v.grad.transpose(), fd_jacobian(fv, net.params())));
  }
  if (!(worst <= 1e-4)) failures.push_back(fmt::format("gradient error {:.2e}", worst));

  std::string detail = fmt::format("zero-multiplier update {}, max gradient rel err {:.2e}",
                                   bitwise ? "bitwise equal to PPO" : "differs from PPO", worst);
  for (const auto& f : failures) detail += "; " + f;
  return finish(4, "Lagrangian update reduces to PPO", failures.empty(), detail, clock);
}

namespace {

double toy_cost_return(const GaussianPolicy& policy, double gamma) {
  ToyCmdp env(false);
  std::vector<double> obs = env.reset(0);
  std::vector<double> costs;
  for (;;) {
    const CmdpTransition t = env.step(policy.act(Eigen::Map<const Eigen::VectorXd>(obs.data(), ToyCmdp::kStates)));
    costs.push_back(t.cost);
    obs = t.observation;
    if (t.done) break;
  }
  return discounted_return(costs, gamma);
}

}  // namespace

CheckResult toy_constraint_satisfaction(std::uint64_t seed) {
  const Stopwatch clock;
  TrainConfig cfg;
  cfg.batch_steps = 400;
  cfg.minibatch = 100;
  cfg.lr_multiplier = 1e-2;
  cfg.total_steps = 400L * 200;
  cfg.seed = seed;
  const auto factory = [] { return std::make_unique<ToyCmdp>(); };

  double cost_return[2] = {0.0, 0.0};
  int first_satisfied = -1;
  Eigen::VectorXd lambda;
  double lambda_max = cfg.lambda_max;
  for (int a = 0; a < 2; ++a) {
    cfg.algorithm = a == 0 ? Algorithm::Ppo : Algorithm::PpoLagrangian;
    Trainer trainer(factory, cfg);
    while (!trainer.finished()) {
      trainer.iterate();
      if (a == 1 && first_satisfied < 0 &&
          toy_cost_return(trainer.agent().policy, cfg.cost_gamma) <= cfg.cost_threshold) {
        first_satisfied = trainer.agent().iteration;
      }
    }
    cost_return[a] = toy_cost_return(trainer.agent().policy, cfg.cost_gamma);
    if (a == 1) lambda = trainer.agent().multiplier.lambda(Eigen::MatrixXd::Identity(ToyCmdp::kStates, ToyCmdp::kStates));
  }
  // Start, Choice and Safe admit a constraint-satisfying policy; Trap never does.
  const MultiplierClass expected[ToyCmdp::kStates] = {MultiplierClass::Safe, MultiplierClass::Safe, MultiplierClass::Safe,
                                                      MultiplierClass::Unsafe};
  bool classes_ok = true;
  std::string classes;
  for (int s = 0; s < ToyCmdp::kStates; ++s) {
    const MultiplierClass c = classify_multiplier(lambda[s], lambda_max);
    classes_ok = classes_ok && c == expected[s];
    classes += fmt::format("{}{:.3g}({})", s ? " " : "", lambda[s], to_string(c));
  }
  const double d = cfg.cost_threshold;
  const bool ok = cost_return[1] <= d && cost_return[0] > d && classes_ok;
  return finish(5, "toy CMDP constraint satisfaction", ok,
                fmt::format("J_c PPO-L-SI {:.3f} (first <= d at iteration {}), PPO {:.3f}, d {}; lambda {}",
                            cost_return[1], first_satisfied, cost_return[0], d, classes),
                clock, 120.0);
}

CheckResult local_optimum_switching() {
  const Stopwatch clock;
  const Scenario sc = Scenario::light();
  const OcpConfig cfg = OcpConfig::for_scenario(sc);
  double reward[2] = {0.0, 0.0};
  double max_y[2] = {0.0, 0.0};
  double gap[2] = {0.0, 0.0};
  bool clean[2] = {true, true};
  for (int mode = 0; mode < 2; ++mode) {
    HighwayEnv env(sc);
    World w;
    w.ego = {100.0, sc.y_ref, 0.0, sc.v_ref};
    TrafficVehicle leader;
    leader.state = {140.0, sc.y_ref, 0.0, 15.0};
    leader.desired_speed = 15.0;
    leader.lane = 0;
    w.traffic.push_back(leader);
    env.reset(w);
    std::shared_ptr<const DrivingPolicy> policy;
    if (mode == 1) policy = std::make_shared<LaneChangePolicy>(sc.lane_center(1));
    SrmpcController controller(cfg, sc, policy);
    for (int k = 0; k < 50 && !env.done(); ++k) {
      const SrmpcStep r = controller.step(env.world(), env.observation(), k * sc.dt);
      if (mode == 1 && r.provenance != Provenance::PolicyReference) clean[mode] = false;
      reward[mode] += env.step(r.control).raw_reward;
      max_y[mode] = std::max(max_y[mode], env.world().ego.y);
    }
    clean[mode] = clean[mode] && !env.done();
    gap[mode] = env.world().ego.x - env.world().traffic[0].state.x;
  }
  const double boundary = sc.lane_width;
  const bool brakes = max_y[0] < boundary && gap[0] < 0.0;
  const bool overtakes = max_y[1] > boundary && gap[1] > 0.0;
  const bool ok = clean[0] && clean[1] && brakes && overtakes && reward[1] > reward[0];
  return finish(6, "reference switches the local optimum", ok,
                fmt::format("shifted reference: max y {:.2f} m, final gap {:.1f} m, sum r' {:.1f}; policy reference: "
                            "max y {:.2f} m, final gap {:.1f} m, sum r' {:.1f}",
                            max_y[0], gap[0], reward[0], max_y[1], gap[1], reward[1]),
                clock);
}

CheckResult fallback_equivalence(std::uint64_t seed, int episodes) {
  const Stopwatch clock;
  const Scenario sc = Scenario::light();
  const OcpConfig cfg = OcpConfig::for_scenario(sc);
  int identical = 0;
  long steps = 0;
  std::string first_mismatch;
  for (int k = 0; k < episodes; ++k) {
    const std::uint64_t s = episode_seed(seed, k);
    const EpisodeRecord mpc = run_episode({ControllerKind::Mpc, nullptr}, sc, cfg, s);
    const EpisodeRecord srmpc = run_episode({ControllerKind::Srmpc, std::make_shared<NanPolicy>()}, sc, cfg, s);
    bool same = mpc.ok() && srmpc.ok() && mpc.trace.size() == srmpc.trace.size();
    for (std::size_t i = 0; same && i < mpc.trace.size(); ++i) {
      same = mpc.trace[i].control.delta == srmpc.trace[i].control.delta && mpc.trace[i].control.a == srmpc.trace[i].control.a;
    }
    steps += static_cast<long>(mpc.trace.size());
    identical += same;
    if (!same && first_mismatch.empty()) first_mismatch = fmt::format("; first mismatch in episode {}", k);
  }
  return finish(8, "failing policy reproduces LTV-MPC", identical == episodes,
                fmt::format("{}/{} episodes bitwise identical over {} steps{}", identical, episodes, steps, first_mismatch),
                clock);
}

fs::path run_dir(const ExtendedOptions& opt, std::uint64_t seed, Algorithm algo) {
  return opt.work_dir / fmt::format("seed_{}", seed) / std::string(to_string(algo));
}

void train_extended(const ExtendedOptions& opt) {
  const Scenario sc = opt.config.scenario;
  const EnvFactory factory = [sc] { return std::make_unique<HighwayCmdp>(sc); };
  for (std::uint64_t seed : opt.seeds) {
    for (Algorithm algo : {Algorithm::Ppo, Algorithm::PpoLagrangian}) {
      TrainConfig cfg = opt.config.train;
      cfg.algorithm = algo;
      cfg.seed = seed;
      cfg.total_steps = opt.train_steps;
      spdlog::info("training {} seed {} for {} steps", to_string(algo), seed, cfg.total_steps);
      train(factory, cfg, run_dir(opt, seed, algo), true);
    }
  }
}

CheckResult table_ordering(const ExtendedOptions& opt) {
  const Stopwatch clock;
  train_extended(opt);
  int passing = 0;
  std::string detail;
  for (std::uint64_t seed : opt.seeds) {
    const auto policy = load_driving_policy(run_dir(opt, seed, Algorithm::PpoLagrangian) / "checkpoint.json");
    EvaluationRequest req;
    req.controllers = {{ControllerKind::Mpc, nullptr}, {ControllerKind::PpoLagrangian, policy}, {ControllerKind::Srmpc, policy}};
    req.scenario = opt.config.scenario;
    req.ocp = opt.config.mpc;
    req.episodes = opt.episodes;
    req.seed = seed;
    req.workers = opt.workers;
    req.config_hash = app_config_hash(opt.config);
    const AggregateReport rep = evaluate(req);
    write_report(opt.work_dir / fmt::format("seed_{}", seed) / "report.json", rep);
    const AggregateRow& mpc = rep.rows[0];
    const AggregateRow& lag = rep.rows[1];
    const AggregateRow& sr = rep.rows[2];
    const bool ok = sr.cost_rate < mpc.cost_rate && sr.cost_rate < lag.cost_rate && sr.episodic_cost < mpc.episodic_cost &&
                    sr.episodic_cost < lag.episodic_cost && sr.n_steps > mpc.n_steps && sr.n_steps > lag.n_steps;
    passing += ok;
    detail += fmt::format("{}seed {} {}: J_c/rho_c/n_steps srmpc {:.3f}/{:.4f}/{:.0f}, mpc {:.3f}/{:.4f}/{:.0f}, "
                          "ppo-l-si {:.3f}/{:.4f}/{:.0f}",
                          detail.empty() ? "" : "; ", seed, ok ? "ordered" : "not ordered", sr.episodic_cost,
                          sr.cost_rate, sr.n_steps, mpc.episodic_cost, mpc.cost_rate, mpc.n_steps, lag.episodic_cost,
                          lag.cost_rate, lag.n_steps);
  }
  const int needed = static_cast<int>(opt.seeds.size()) - static_cast<int>(opt.seeds.size()) / 3;
  return finish(7, "comparison table ordering", passing >= needed,
                fmt::format("{}/{} seeds ordered (need {}); {}", passing, opt.seeds.size(), needed, detail), clock);
}

CheckResult training_safety_trend(const ExtendedOptions& opt) {
  const Stopwatch clock;
  train_extended(opt);
  int passing = 0;
  std::string detail;
  for (std::uint64_t seed : opt.seeds) {
    std::vector<double> rate[2];
    for (int a = 0; a < 2; ++a) {
      const auto curve = read_curve_csv(run_dir(opt, seed, a ? Algorithm::PpoLagrangian : Algorithm::Ppo) / "curve.csv");
      std::vector<double> series;
      for (const auto& row : curve) series.push_back(row.cost_rate);
      rate[a] = running_mean(series, opt.window);
    }
    const std::size_t n = std::min(rate[0].size(), rate[1].size());
    bool ok = n >= 3;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double tail[2] = {0.0, 0.0};
    if (ok) {
      const std::size_t from = n - n / 3;
      for (int a = 0; a < 2; ++a) {
        for (std::size_t i = from; i < n; ++i) tail[a] += rate[a][i];
        tail[a] /= static_cast<double>(n - from);
      }
      ratio = rate[1][n - 1] / rate[0][n - 1];
      ok = tail[1] < tail[0] && ratio <= 0.75;
    }
    passing += ok;
    detail += fmt::format("{}seed {}: final ratio {:.3f}, final-third mean rho_c PPO-L-SI {:.5f} vs PPO {:.5f}",
                          detail.empty() ? "" : "; ", seed, ratio, tail[1], tail[0]);
  }
  const int needed = static_cast<int>(opt.seeds.size()) - static_cast<int>(opt.seeds.size()) / 3;
  return finish(9, "training cost-rate trend", passing >= needed,
                fmt::format("{}/{} seeds (need {}); {}", passing, opt.seeds.size(), needed, detail), clock);
}

std::vector<CheckResult> run_ci_tier(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(qp_oracle_equivalence(seed));
  out.push_back(linearization_correctness(seed));
  out.push_back(safety_index_contract(seed));
  out.push_back(reduction_identity(seed));
  out.push_back(toy_constraint_satisfaction(seed));
  out.push_back(local_optimum_switching());
  out.push_back(fallback_equivalence(seed));
  return out;
}

}  // namespace srmpc::checks
