#include "srmpc/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "srmpc/checkpoint.hpp"
#include "srmpc/config.hpp"
#include "srmpc/error.hpp"
#include "srmpc/io.hpp"

namespace srmpc {
namespace {

namespace fs = std::filesystem;

class NanPolicy : public DrivingPolicy {
 public:
  ControlInput act(const World&, const Observation&, const Scenario&) const override { return {std::nan(""), 0.0}; }
};

class FullThrottle : public DrivingPolicy {
 public:
  ControlInput act(const World&, const Observation&, const Scenario&) const override { return {0.0, 3.0}; }
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("srmpc_bench_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<TraceStep> constant_trace(int n, double r, Termination end) {
  std::vector<TraceStep> t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    t[static_cast<std::size_t>(k)].step = k;
    t[static_cast<std::size_t>(k)].state = {25.0 * k * 0.1, 2.0, 0.0, 20.0};
    t[static_cast<std::size_t>(k)].raw_reward = r;
  }
  t.back().termination = end;
  return t;
}

EpisodeRecord record_with(double cost, int steps) {
  EpisodeRecord r;
  r.metrics.episodic_cost = cost;
  r.metrics.n_steps = steps;
  return r;
}

Scenario short_scenario() {
  Scenario sc = Scenario::light();
  sc.max_steps = 40;
  return sc;
}

TEST(Metrics, CollisionFreeFullEpisode) {
  const auto trace = constant_trace(400, -1.0, Termination::Timeout);
  const EpisodeMetrics m = compute_metrics(trace, 400);
  EXPECT_EQ(m.episodic_cost, 0.0);
  EXPECT_EQ(m.n_steps, 400);
  EXPECT_DOUBLE_EQ(m.mean_vx, 20.0);
}

TEST(Metrics, CollisionAfterHundredSteps) {
  const auto trace = constant_trace(100, -5.0, Termination::Collision);
  const EpisodeMetrics m = compute_metrics(trace, 400);
  EXPECT_DOUBLE_EQ(m.episodic_return, -500.0);
  EXPECT_DOUBLE_EQ(m.return_per_step, -5.0);
  EXPECT_EQ(m.episodic_cost, 1.0);
  EXPECT_EQ(m.n_steps, 100);
}

TEST(Metrics, RoadExitCountsAsCost) {
  EXPECT_EQ(compute_metrics(constant_trace(7, -1.0, Termination::RoadExit), 400).episodic_cost, 1.0);
  EXPECT_EQ(compute_metrics(constant_trace(7, -1.0, Termination::Goal), 400).episodic_cost, 0.0);
}

TEST(Metrics, RejectsMalformedTraces) {
  EXPECT_THROW(compute_metrics({}, 400), InvalidArgument);
  EXPECT_THROW(compute_metrics(constant_trace(10, -1.0, Termination::Running), 400), InvalidArgument);
  EXPECT_THROW(compute_metrics(constant_trace(401, -1.0, Termination::Timeout), 400), InvalidArgument);
  auto gap = constant_trace(10, -1.0, Termination::Timeout);
  gap[4].step = 5;
  EXPECT_THROW(compute_metrics(gap, 400), InvalidArgument);
  auto early = constant_trace(10, -1.0, Termination::Timeout);
  early[3].termination = Termination::Collision;
  EXPECT_THROW(compute_metrics(early, 400), InvalidArgument);
}

TEST(Metrics, CostRateOverEpisodes) {
  const std::vector<EpisodeRecord> records{record_with(1.0, 100), record_with(0.0, 400), record_with(1.0, 50)};
  EXPECT_NEAR(cost_rate(records), 0.003636, 1e-6);
  EXPECT_DOUBLE_EQ(cost_rate(records), 2.0 / 550.0);
}

TEST(Metrics, AbortedEpisodesAreCountedNotAveraged) {
  std::vector<EpisodeRecord> records{record_with(1.0, 100), record_with(0.0, 300)};
  records[1].metrics.episodic_return = -30.0;
  records.push_back(record_with(1.0, 5));
  records.back().error = "spawn failed";
  const AggregateRow row = aggregate(records);
  EXPECT_EQ(row.episodes, 2);
  EXPECT_EQ(row.aborted, 1);
  EXPECT_DOUBLE_EQ(row.episodic_cost, 0.5);
  EXPECT_DOUBLE_EQ(row.n_steps, 200.0);
  EXPECT_DOUBLE_EQ(row.episodic_return, -15.0);
  EXPECT_DOUBLE_EQ(row.cost_rate, 1.0 / 400.0);
}

TEST(RunningMean, Examples) {
  const std::vector<double> s{0.0, 1.0, 0.0, 1.0};
  EXPECT_EQ(running_mean(s, 2), (std::vector<double>{0.0, 0.5, 0.5, 0.5}));
  EXPECT_EQ(running_mean(s, 1), s);
  const std::vector<double> c(30, 2.5);
  for (double v : running_mean(c, 20)) EXPECT_DOUBLE_EQ(v, 2.5);
  EXPECT_TRUE(running_mean(std::vector<double>{}, 3).empty());
  EXPECT_THROW(running_mean(s, 0), InvalidArgument);
}

TEST(RunningMean, MatchesDirectWindowAverage) {
  std::vector<double> s;
  for (int i = 0; i < 50; ++i) s.push_back(std::sin(0.7 * i) + 0.01 * i * i);
  for (int window : {1, 3, 20, 60}) {
    const auto out = running_mean(s, window);
    for (int i = 0; i < 50; ++i) {
      double sum = 0.0;
      const int lo = std::max(0, i - window + 1);
      for (int j = lo; j <= i; ++j) sum += s[static_cast<std::size_t>(j)];
      EXPECT_NEAR(out[static_cast<std::size_t>(i)], sum / (i - lo + 1), 1e-12);
    }
  }
}

TEST(Episode, ControllerNames) {
  for (auto k : {ControllerKind::Mpc, ControllerKind::Ppo, ControllerKind::PpoLagrangian, ControllerKind::Srmpc}) {
    EXPECT_EQ(parse_controller(to_string(k)), k);
  }
  EXPECT_EQ(parse_controller("ppo-l-si"), ControllerKind::PpoLagrangian);
  EXPECT_THROW(parse_controller("lqr"), ConfigError);
}

TEST(Episode, MissingPolicyIsAConfigError) {
  const Scenario sc = short_scenario();
  EXPECT_THROW(run_episode({ControllerKind::Srmpc, nullptr}, sc, OcpConfig::for_scenario(sc), 0), ConfigError);
  EXPECT_THROW(run_episode({ControllerKind::Ppo, nullptr}, sc, OcpConfig::for_scenario(sc), 0), ConfigError);
  EXPECT_THROW(load_driving_policy(scratch("missing") / "checkpoint.json"), ConfigError);
  const fs::path junk = scratch("junk") / "checkpoint.json";
  write_file_atomic(junk, "{\"schema\": \"nope\"}");
  EXPECT_THROW(load_driving_policy(junk), ConfigError);
}

TEST(Episode, LoadsPolicyFromCheckpoint) {
  const Scenario sc = short_scenario();
  TrainConfig tc;
  tc.hidden = {8};
  const Agent agent = Agent::create(static_cast<int>(kObservationFeatures), control_box(sc.limits), tc);
  const fs::path path = scratch("ckpt") / "checkpoint.json";
  save_checkpoint(path, agent, {});
  const auto policy = load_driving_policy(path);
  HighwayEnv env(sc);
  env.reset(1);
  const ControlInput u = policy->act(env.world(), env.observation(), sc);
  const Eigen::VectorXd expected = agent.policy.act(
      Eigen::Map<const Eigen::VectorXd>(env.observation().features(sc).data(), kObservationFeatures));
  EXPECT_EQ(u.delta, expected[0]);
  EXPECT_EQ(u.a, expected[1]);
}

TEST(Episode, MpcStartsFromConstantVelocityAndIsDeterministic) {
  const Scenario sc = short_scenario();
  const OcpConfig cfg = OcpConfig::for_scenario(sc);
  const EpisodeRecord a = run_episode({ControllerKind::Mpc, nullptr}, sc, cfg, 11);
  const EpisodeRecord b = run_episode({ControllerKind::Mpc, nullptr}, sc, cfg, 11);
  ASSERT_TRUE(a.ok()) << a.error;
  EXPECT_EQ(trace_jsonl(a), trace_jsonl(b));
  // The first step linearizes about the constant-velocity trajectory.
  HighwayEnv env(sc);
  env.reset(spawn_world(sc, 11));
  MpcController mpc(cfg, sc.y_ref, sc.v_ref);
  const VehicleState x0 = env.world().ego;
  const MpcStep first = mpc.step(x0, constant_velocity_reference(x0, cfg.horizon, cfg.dt),
                                 predict_obstacles(env.world(), env.observation(), sc, cfg.horizon));
  EXPECT_EQ(a.trace.front().control.delta, sc.limits.clamp(first.control).delta);
  EXPECT_EQ(a.trace.front().control.a, sc.limits.clamp(first.control).a);
}

TEST(Episode, FailingPolicySrmpcReproducesMpcTrace) {
  const Scenario sc = short_scenario();
  const OcpConfig cfg = OcpConfig::for_scenario(sc);
  for (std::uint64_t seed : {2u, 9u}) {
    const EpisodeRecord mpc = run_episode({ControllerKind::Mpc, nullptr}, sc, cfg, seed);
    const EpisodeRecord srmpc = run_episode({ControllerKind::Srmpc, std::make_shared<NanPolicy>()}, sc, cfg, seed);
    ASSERT_TRUE(mpc.ok() && srmpc.ok());
    ASSERT_EQ(mpc.trace.size(), srmpc.trace.size());
    for (std::size_t k = 0; k < mpc.trace.size(); ++k) {
      EXPECT_EQ(mpc.trace[k].control.delta, srmpc.trace[k].control.delta);
      EXPECT_EQ(mpc.trace[k].control.a, srmpc.trace[k].control.a);
      EXPECT_EQ(mpc.trace[k].state.vec(), srmpc.trace[k].state.vec());
      EXPECT_EQ(mpc.trace[k].provenance, srmpc.trace[k].provenance);
    }
  }
}

TEST(Episode, CollisionEndsTheEpisodeWithUnitCost) {
  const Scenario sc = Scenario::light();
  const EpisodeRecord r = run_episode({ControllerKind::Ppo, std::make_shared<FullThrottle>()}, sc,
                                      OcpConfig::for_scenario(sc), 0);
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(r.metrics.termination, Termination::Collision);
  EXPECT_EQ(r.metrics.episodic_cost, 1.0);
  EXPECT_LT(r.metrics.n_steps, 400);
  EXPECT_EQ(r.trace.back().termination, Termination::Collision);
  for (const auto& s : r.trace) EXPECT_EQ(s.provenance, Provenance::PolicyAction);
}

TEST(Episode, NonFiniteActionIsRecordedNotThrown) {
  const Scenario sc = short_scenario();
  const EpisodeRecord r = run_episode({ControllerKind::Ppo, std::make_shared<NanPolicy>()}, sc,
                                      OcpConfig::for_scenario(sc), 0);
  EXPECT_FALSE(r.ok());
  EXPECT_NE(r.error.find("non-finite"), std::string::npos);
}

TEST(Trace, RoundTripReproducesMetricsExactly) {
  const Scenario sc = short_scenario();
  const EpisodeRecord r = run_episode({ControllerKind::Mpc, nullptr}, sc, OcpConfig::for_scenario(sc), 4);
  ASSERT_TRUE(r.ok());
  const fs::path path = scratch("trace") / "t.jsonl";
  write_trace(path, r);
  const EpisodeRecord back = read_trace(path);
  EXPECT_EQ(back.controller, r.controller);
  EXPECT_EQ(back.seed, r.seed);
  ASSERT_EQ(back.trace.size(), r.trace.size());
  EXPECT_EQ(back.metrics.episodic_return, r.metrics.episodic_return);
  EXPECT_EQ(back.metrics.return_per_step, r.metrics.return_per_step);
  EXPECT_EQ(back.metrics.mean_vx, r.metrics.mean_vx);
  EXPECT_EQ(back.metrics.n_steps, r.metrics.n_steps);
  EXPECT_EQ(back.metrics.episodic_cost, r.metrics.episodic_cost);
  EXPECT_EQ(trace_jsonl(back), trace_jsonl(r));
}

TEST(Trace, RejectsMalformedFiles) {
  EXPECT_THROW(parse_trace(""), InvalidArgument);
  EXPECT_THROW(parse_trace("{\"schema\": \"other\"}\n"), InvalidArgument);
  EXPECT_THROW(parse_trace("not json\n"), InvalidArgument);
  const std::string header = R"({"schema":"srmpc.trace/1","controller":"mpc","seed":1,"density":"light","max_steps":400})";
  EXPECT_THROW(parse_trace(header + "\n{\"step\": 0}\n"), InvalidArgument);
}

TEST(Evaluate, SeedPairedAndDeterministic) {
  const Scenario sc = short_scenario();
  EvaluationRequest req;
  req.controllers = {{ControllerKind::Mpc, nullptr}, {ControllerKind::Srmpc, std::make_shared<NanPolicy>()}};
  req.scenario = sc;
  req.ocp = OcpConfig::for_scenario(sc);
  req.episodes = 5;
  req.seed = 7;
  req.workers = 1;
  const AggregateReport one = evaluate(req);
  req.workers = 3;
  const AggregateReport three = evaluate(req);
  EXPECT_EQ(report_to_json(one).dump(), report_to_json(three).dump());

  ASSERT_EQ(one.per_episode.size(), 10u);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(one.per_episode[static_cast<std::size_t>(k)].seed, episode_seed(7, k));
    EXPECT_EQ(one.per_episode[static_cast<std::size_t>(k + 5)].seed, episode_seed(7, k));
  }
  // The failing-policy controller degenerates to LTV-MPC, row for row.
  const auto same_row = [](const AggregateRow& a, const AggregateRow& b) {
    return a.episodic_return == b.episodic_return && a.cost_rate == b.cost_rate && a.n_steps == b.n_steps;
  };
  EXPECT_TRUE(same_row(one.rows[0], one.rows[1]));

  // Cost rate recomputed from the per-episode metrics.
  double costs = 0.0;
  double steps = 0.0;
  for (int k = 0; k < 5; ++k) {
    costs += one.per_episode[static_cast<std::size_t>(k)].metrics.episodic_cost;
    steps += one.per_episode[static_cast<std::size_t>(k)].metrics.n_steps;
  }
  EXPECT_DOUBLE_EQ(one.rows[0].cost_rate, costs / steps);
}

TEST(Evaluate, ReportRoundTripsThroughJson) {
  AggregateReport rep;
  rep.config_hash = "0123456789abcdef";
  rep.seed = 3;
  rep.episodes = 2;
  AggregateRow row;
  row.controller = ControllerKind::Srmpc;
  row.episodes = 2;
  row.episodic_return = -1234.5678;
  row.return_per_step = -3.25;
  row.episodic_cost = 0.5;
  row.cost_rate = 1.0 / 1100.0;
  row.n_steps = 275.5;
  row.mean_vx = 24.125;
  rep.rows.push_back(row);
  EpisodeSummaryRow e;
  e.controller = ControllerKind::Srmpc;
  e.seed = 99;
  e.metrics.termination = Termination::Timeout;
  e.metrics.n_steps = 400;
  rep.per_episode.push_back(e);
  e.error = "boom";
  rep.per_episode.push_back(e);
  const auto j = report_to_json(rep);
  EXPECT_EQ(report_to_json(report_from_json(j)), j);
  EXPECT_EQ(report_csv(rep).substr(0, report_csv(rep).find('\n')),
            "controller,density,episodes,aborted,J_r,J_r_per_step,J_c,rho_c,n_steps,v_x");

  const fs::path dir = scratch("report");
  write_report(dir / "r.json", rep);
  EXPECT_EQ(read_json_file(dir / "r.json"), j);
  EXPECT_EQ(read_file(dir / "r.csv"), report_csv(rep));
  EXPECT_THROW(report_from_json(nlohmann::json{{"schema", "x"}}), InvalidArgument);
}

TEST(Evaluate, RejectsBadRequests) {
  EvaluationRequest req;
  req.scenario = short_scenario();
  req.ocp = OcpConfig::for_scenario(req.scenario);
  EXPECT_THROW(evaluate(req), ConfigError);
  req.controllers = {{ControllerKind::Srmpc, nullptr}};
  EXPECT_THROW(evaluate(req), ConfigError);
  req.controllers = {{ControllerKind::Mpc, nullptr}};
  req.episodes = 0;
  EXPECT_THROW(evaluate(req), ConfigError);
}

TEST(Config, DefaultsAndOverrides) {
  const AppConfig c = parse_config(R"(
[scenario]
density = dense
max_steps = 200

[mpc]
horizon = 20
q = 0, 1, 1, 2
qp_polish = false

[si]
eta = 0.1

[train]
algorithm = ppo
hidden = 32,16
total_steps = 5000
)");
  EXPECT_EQ(c.scenario.traffic_density, TrafficDensity::Dense);
  EXPECT_EQ(c.scenario.spawn_spacing_mean, Scenario::dense().spawn_spacing_mean);
  EXPECT_EQ(c.scenario.max_steps, 200);
  EXPECT_EQ(c.mpc.horizon, 20);
  EXPECT_EQ(c.mpc.q, Eigen::Vector4d(0.0, 1.0, 1.0, 2.0));
  EXPECT_FALSE(c.mpc.qp.polish);
  EXPECT_EQ(c.mpc.qp.eps_abs, OcpConfig::for_scenario(c.scenario).qp.eps_abs);
  EXPECT_EQ(c.scenario.si.eta, 0.1);
  EXPECT_EQ(c.train.algorithm, Algorithm::Ppo);
  EXPECT_EQ(c.train.hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.train.total_steps, 5000);
}

TEST(Config, EmptyFileGivesDefaults) {
  const AppConfig c = parse_config("");
  EXPECT_EQ(c.scenario.traffic_density, TrafficDensity::Light);
  EXPECT_EQ(c.mpc.horizon, OcpConfig{}.horizon);
  EXPECT_EQ(config_hash(c.train), config_hash(TrainConfig{}));
}

TEST(Config, CanonicalFormRoundTrips) {
  AppConfig c = parse_config("[mpc]\nheading_max = 0.08\n[train]\nseed = 12\n");
  const std::string ini = config_to_ini(c);
  EXPECT_EQ(config_to_ini(parse_config(ini)), ini);
  EXPECT_EQ(app_config_hash(parse_config(ini)), app_config_hash(c));
  c.train.seed = 13;
  EXPECT_NE(app_config_hash(c), app_config_hash(parse_config(ini)));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("[scenario]\nlanes = 4\n"), ConfigError);
  EXPECT_THROW(parse_config("[physics]\ng = 9.81\n"), ConfigError);
  EXPECT_THROW(parse_config("[mpc]\nhorizon = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("[mpc]\nhorizon = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("[mpc]\nq = 1,2\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario]\ndensity = rush\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nalgorithm = sac\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nclip = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[mpc\nhorizon = 3\n"), ConfigError);
  EXPECT_THROW(load_config(scratch("cfg") / "absent.ini"), ConfigError);
}

}  // namespace
}  // namespace srmpc
