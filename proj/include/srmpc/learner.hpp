#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "srmpc/nn.hpp"
#include "srmpc/traffic.hpp"

namespace srmpc {

struct BoxSpace {
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  int dim() const { return static_cast<int>(low.size()); }
  bool contains(const Eigen::VectorXd& a) const;
};

struct CmdpTransition {
  std::vector<double> observation;  // features of the next state
  double reward = 0.0;               // reward the learner maximizes
  double metric_reward = 0.0;        // reward reported in the metrics
  double cost = 0.0;
  double safety_index = 0.0;         // of the next state
  bool done = false;
  bool terminal = false;             // done without a successor value
  bool failure = false;              // episode-level cost event
};

// Episodic CMDP seen by the learner.
class CmdpEnv {
 public:
  virtual ~CmdpEnv() = default;
  virtual int observation_dim() const = 0;
  virtual BoxSpace action_space() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual CmdpTransition step(const Eigen::VectorXd& action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<CmdpEnv>()>;

BoxSpace control_box(const ControlLimits& limits);

// Highway episodes with the normalized reward for learning, r' as the metric
// reward and the safety-index cost. Actions are (delta, a).
class HighwayCmdp : public CmdpEnv {
 public:
  explicit HighwayCmdp(Scenario scenario);

  int observation_dim() const override { return static_cast<int>(kObservationFeatures); }
  BoxSpace action_space() const override { return control_box(env_.scenario().limits); }
  std::vector<double> reset(std::uint64_t seed) override;
  CmdpTransition step(const Eigen::VectorXd& action) override;

  const HighwayEnv& env() const { return env_; }

 private:
  HighwayEnv env_;
};

// Four-state CMDP with a known safe policy. From Start the agent reaches
// Choice, where a positive action pays a bonus and falls into Trap (unsafe,
// absorbing, rewarding); any other action leads to Safe (absorbing). The
// unconstrained optimum enters the trap; the safe policy picks a <= 0.
// Observations are one-hot. Episodes last `horizon` steps.
class ToyCmdp : public CmdpEnv {
 public:
  enum State { Start = 0, Choice = 1, Safe = 2, Trap = 3 };
  static constexpr int kStates = 4;

  // With exploring starts the initial state is uniform over all states.
  explicit ToyCmdp(bool exploring_starts = true, int horizon = 10);

  int observation_dim() const override { return kStates; }
  BoxSpace action_space() const override;
  std::vector<double> reset(std::uint64_t seed) override;
  CmdpTransition step(const Eigen::VectorXd& action) override;

  State state() const { return state_; }
  static std::vector<double> one_hot(State s);

  // Per-step reward and cost of taking `action` in `s`, and the successor.
  struct Outcome {
    double reward;
    double cost;
    State next;
  };
  static Outcome transition(State s, double action);

 private:
  bool exploring_starts_;
  int horizon_;
  State state_ = Start;
  int t_ = 0;
};

// Gaussian policy over pre-squash actions u; the applied action is
// mid + half_width * tanh(u) inside the box.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int observation_dim, BoxSpace box, const std::vector<int>& hidden, double init_log_std,
                 std::mt19937_64& rng);

  const BoxSpace& box() const { return box_; }
  Mlp& mean_net() { return mean_net_; }
  const Mlp& mean_net() const { return mean_net_; }
  Eigen::VectorXd& log_std() { return log_std_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }

  // Mean-net parameters followed by log_std.
  Eigen::Index num_params() const { return mean_net_.num_params() + log_std_.size(); }
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& p);

  Eigen::MatrixXd mean(const Eigen::MatrixXd& obs) const;
  Eigen::VectorXd squash(const Eigen::VectorXd& u) const;
  // Pre-squash u whose squashed value is `action` (clipped inside the box).
  Eigen::VectorXd unsquash(const Eigen::VectorXd& action) const;
  // Log-density of each column of u, including the squash correction.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& u) const;

  struct Sample {
    Eigen::VectorXd u;
    Eigen::VectorXd action;
    double log_prob = 0.0;
  };
  Sample sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const;
  // Squashed mean action.
  Eigen::VectorXd act(const Eigen::VectorXd& obs) const;

 private:
  BoxSpace box_;
  Mlp mean_net_;
  Eigen::VectorXd log_std_;
};

// Relation between a state's multiplier and its constraint status.
enum class MultiplierClass { Safe, Boundary, Unsafe };

std::string_view to_string(MultiplierClass c);
// 0 -> safe, (0, lambda_max) -> boundary, >= lambda_max -> unsafe.
MultiplierClass classify_multiplier(double lambda, double lambda_max);

// State-dependent multiplier: a network output clamped to [0, lambda_max].
class MultiplierHead {
 public:
  MultiplierHead() = default;
  MultiplierHead(int observation_dim, const std::vector<int>& hidden, double lambda_max, double margin,
                 std::mt19937_64& rng);

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  double lambda_max() const { return lambda_max_; }
  double margin() const { return margin_; }

  Eigen::VectorXd raw(const Eigen::MatrixXd& obs) const;
  Eigen::VectorXd lambda(const Eigen::MatrixXd& obs) const;

 private:
  Mlp net_;
  double lambda_max_ = 100.0;
  // The unclamped output is regressed within [-margin, lambda_max + margin].
  double margin_ = 5.0;
};

enum class Algorithm { Ppo, PpoLagrangian };

std::string_view to_string(Algorithm a);
// "ppo" or "ppo-l-si".
Algorithm parse_algorithm(std::string_view text);

struct TrainConfig {
  Algorithm algorithm = Algorithm::PpoLagrangian;
  double gamma = 0.99;
  double cost_gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  int minibatch = 256;
  int batch_steps = 2048;
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double lr_multiplier = 1e-3;
  double max_grad_norm = 0.5;
  double entropy_coef = 0.0;
  double init_log_std = -0.5;
  std::vector<int> hidden{64, 64};
  double lambda_max = 100.0;
  // Ascent step on the multiplier per unit of constraint violation.
  double multiplier_step = 1.0;
  double multiplier_margin = 5.0;
  int multiplier_epochs = 5;
  double cost_threshold = 0.0;
  // Per-step cost of the absorbing state after a collision or road exit; its
  // cost-to-go failure_cost / (1 - cost_gamma) bootstraps failed episodes.
  double failure_cost = 1.0;
  long total_steps = 300000;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;

  void validate() const;
};

struct Agent {
  TrainConfig config;
  GaussianPolicy policy;
  Mlp value;
  Mlp cost_value;
  MultiplierHead multiplier;
  AdamState policy_opt;
  AdamState value_opt;
  AdamState cost_value_opt;
  AdamState multiplier_opt;
  int iteration = 0;
  long steps = 0;

  static Agent create(int observation_dim, const BoxSpace& box, const TrainConfig& config);
};

struct EpisodeSummary {
  double reward_return = 0.0;
  double metric_return = 0.0;
  double cost_return = 0.0;
  int steps = 0;
  bool failure = false;
};

// On-policy samples in time order; one column per step.
struct Batch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd next_obs;
  Eigen::MatrixXd u;
  Eigen::MatrixXd action;
  Eigen::VectorXd log_prob;
  Eigen::VectorXd reward;
  Eigen::VectorXd metric_reward;
  Eigen::VectorXd cost;
  Eigen::VectorXd safety_index;
  std::vector<char> done;
  std::vector<char> terminal;
  std::vector<char> failure;
  // Episodes that ended inside the batch.
  std::vector<EpisodeSummary> episodes;

  Eigen::Index size() const { return reward.size(); }
};

// Collects n_steps transitions, resetting with seeds drawn from rng. The last
// step is marked done (truncated). An environment error truncates the batch.
Batch rollout(CmdpEnv& env, const GaussianPolicy& policy, int n_steps, std::mt19937_64& rng,
              bool deterministic = false);

double discounted_return(std::span<const double> rewards, double gamma);

struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd targets;  // advantages + values
};

// Generalized advantage estimation. next_values[t] is the value of the
// successor of step t (0 after a terminal step); done[t] cuts the recursion.
AdvantageEstimate gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const Eigen::VectorXd& next_values, const std::vector<char>& done, double gamma,
                      double lambda);

struct BatchAdvantages {
  Eigen::VectorXd reward_advantages;  // normalized
  Eigen::VectorXd reward_targets;
  Eigen::VectorXd cost_advantages;    // not normalized
  Eigen::VectorXd cost_targets;
  Eigen::VectorXd lambda;             // multiplier per step; zero for PPO
};

BatchAdvantages estimate_advantages(const Batch& batch, const Agent& agent);

// Per-step policy-gradient weight A_r - lambda * A_c.
Eigen::VectorXd surrogate_weights(const Eigen::VectorXd& reward_advantages, const Eigen::VectorXd& cost_advantages,
                                  const Eigen::VectorXd& lambda);

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Clipped surrogate, negated for minimization, minus the entropy bonus.
LossResult policy_loss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& u,
                       const Eigen::VectorXd& old_log_prob, const Eigen::VectorXd& weights, double clip,
                       double entropy_coef);

// 0.5 * mean squared error of a scalar-output network.
LossResult regression_loss(const Mlp& net, const Eigen::MatrixXd& obs, const Eigen::VectorXd& targets);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double cost_value_loss = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int rejected_steps = 0;
};

// Minibatch epochs over the policy, value and cost-value networks. A step with
// a non-finite loss is skipped and that network's learning rate halved.
UpdateStats ppo_update(const Batch& batch, const BatchAdvantages& adv, Agent& agent, std::mt19937_64& rng);

struct MultiplierStats {
  double mean_before = 0.0;
  double mean_after = 0.0;
};

// Pointwise ascent on the Lagrangian: the multiplier of each state moves by
// multiplier_step * (cost_value - cost_threshold), realized by regressing the
// network onto the stepped, clamped values.
MultiplierStats multiplier_update(const Eigen::MatrixXd& obs, const Eigen::VectorXd& cost_values, Agent& agent,
                                  std::mt19937_64& rng);

struct CurveRow {
  int iteration = 0;
  long steps = 0;
  double episodic_return = 0.0;  // mean metric return of finished episodes
  double episodic_cost = 0.0;    // fraction of finished episodes that failed
  double cost_rate = 0.0;        // failures / steps in the batch
  double episode_steps = 0.0;    // mean length of finished episodes
  double mean_lambda = 0.0;
};

// One train iteration per call: rollout, advantages, PPO update and, for
// PPO-L-SI, the multiplier update. Random streams are derived from (seed,
// iteration), so a resumed run continues bit for bit.
class Trainer {
 public:
  Trainer(EnvFactory factory, const TrainConfig& config);
  Trainer(EnvFactory factory, Agent agent, std::vector<CurveRow> curve = {});

  CurveRow iterate();
  bool finished() const { return agent_.steps >= agent_.config.total_steps; }

  const Agent& agent() const { return agent_; }
  Agent& agent() { return agent_; }
  const std::vector<CurveRow>& curve() const { return curve_; }

 private:
  EnvFactory factory_;
  std::unique_ptr<CmdpEnv> env_;
  Agent agent_;
  std::vector<CurveRow> curve_;
};

// Something that drives the ego from a world snapshot.
class DrivingPolicy {
 public:
  virtual ~DrivingPolicy() = default;
  virtual ControlInput act(const World& world, const Observation& obs, const Scenario& scenario) const = 0;
};

// Mean action of a trained policy on the observation features.
class LearnedDrivingPolicy : public DrivingPolicy {
 public:
  explicit LearnedDrivingPolicy(GaussianPolicy policy) : policy_(std::move(policy)) {}
  ControlInput act(const World& world, const Observation& obs, const Scenario& scenario) const override;

  const GaussianPolicy& policy() const { return policy_; }

 private:
  GaussianPolicy policy_;
};

// Steers towards a fixed lateral position at constant speed.
class LaneChangePolicy : public DrivingPolicy {
 public:
  explicit LaneChangePolicy(double target_y) : target_y_(target_y) {}
  ControlInput act(const World& world, const Observation& obs, const Scenario& scenario) const override;

 private:
  double target_y_;
};

// Deterministic rollout of the policy in a copy of the world whose traffic
// moves at constant velocity in its lane. Returns horizon+1 states and horizon
// controls. Throws RolloutError on non-finite values, a road departure beyond
// max_departure or a collision in the copied world. The follower in the ego's
// lane is ignored, as in the MPC obstacle prediction.
Trajectory policy_rollout_reference(const DrivingPolicy& policy, const World& world, const Scenario& scenario,
                                    int horizon, double t0 = 0.0, double max_departure = 0.5);

}  // namespace srmpc
