#include "srmpc/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "srmpc/error.hpp"
#include "srmpc/mpc.hpp"

namespace srmpc {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// log(1 - tanh(x)^2), stable for large |x|.
double log_sech2(double x) {
  const double ax = std::abs(x);
  return 2.0 * (std::numbers::ln2 - ax - std::log1p(std::exp(-2.0 * ax)));
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

std::mt19937_64 stream(std::uint64_t seed, int iteration, int purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Adam step unless the loss or gradient is non-finite; then the learning
// rate is halved and the step rejected.
bool guarded_step(AdamState& opt, Eigen::VectorXd& params, const LossResult& r, const char* what) {
  if (std::isfinite(r.loss) && all_finite(r.grad)) {
    opt.step(params, r.grad);
    return true;
  }
  opt.learning_rate *= 0.5;
  spdlog::warn("non-finite {} loss, step rejected, learning rate now {}", what, opt.learning_rate);
  return false;
}

}  // namespace

bool BoxSpace::contains(const Eigen::VectorXd& a) const {
  return a.size() == low.size() && (a.array() >= low.array()).all() && (a.array() <= high.array()).all();
}

BoxSpace control_box(const ControlLimits& limits) {
  BoxSpace box;
  box.low = Eigen::Vector2d(-limits.delta_max, limits.a_min);
  box.high = Eigen::Vector2d(limits.delta_max, limits.a_max);
  return box;
}

HighwayCmdp::HighwayCmdp(Scenario scenario) : env_(std::move(scenario)) {}

std::vector<double> HighwayCmdp::reset(std::uint64_t seed) {
  return env_.reset(seed).features(env_.scenario());
}

CmdpTransition HighwayCmdp::step(const Eigen::VectorXd& action) {
  const StepOutcome out = env_.step(ControlInput{action[0], action[1]});
  CmdpTransition t;
  t.observation = out.observation.features(env_.scenario());
  t.reward = out.reward;
  t.metric_reward = out.raw_reward;
  t.cost = out.safety.cost;
  t.safety_index = out.safety.phi_s_next;
  t.done = out.done();
  t.terminal = t.done && out.termination != Termination::Timeout;
  t.failure = is_failure(out.termination);
  return t;
}

ToyCmdp::ToyCmdp(bool exploring_starts, int horizon) : exploring_starts_(exploring_starts), horizon_(horizon) {
  if (horizon <= 0) throw InvalidArgument("toy horizon must be positive");
}

BoxSpace ToyCmdp::action_space() const {
  BoxSpace box;
  box.low = Eigen::VectorXd::Constant(1, -1.0);
  box.high = Eigen::VectorXd::Constant(1, 1.0);
  return box;
}

std::vector<double> ToyCmdp::one_hot(State s) {
  std::vector<double> v(kStates, 0.0);
  v[static_cast<std::size_t>(s)] = 1.0;
  return v;
}

ToyCmdp::Outcome ToyCmdp::transition(State s, double action) {
  switch (s) {
    case Start:
      return {0.0, kCostFloor, Choice};
    case Choice:
      if (action > 0.0) return {1.0, 1.0, Trap};
      return {0.2, kCostFloor, Safe};
    case Safe:
      return {0.2, kCostFloor, Safe};
    case Trap:
      return {0.5, 1.0, Trap};
  }
  throw InvalidArgument("unknown toy state");
}

std::vector<double> ToyCmdp::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  state_ = exploring_starts_ ? static_cast<State>(std::uniform_int_distribution<int>(0, kStates - 1)(rng)) : Start;
  t_ = 0;
  return one_hot(state_);
}

CmdpTransition ToyCmdp::step(const Eigen::VectorXd& action) {
  if (t_ >= horizon_) throw UsageError("toy episode already finished");
  const Outcome o = transition(state_, action[0]);
  CmdpTransition t;
  t.reward = o.reward;
  t.metric_reward = o.reward;
  t.cost = o.cost;
  t.safety_index = o.next == Trap ? 1.0 : -1.0;
  t.failure = o.next == Trap && state_ != Trap;
  state_ = o.next;
  ++t_;
  t.done = t_ >= horizon_;
  t.observation = one_hot(state_);
  return t;
}

GaussianPolicy::GaussianPolicy(int observation_dim, BoxSpace box, const std::vector<int>& hidden,
                               double init_log_std, std::mt19937_64& rng)
    : box_(std::move(box)) {
  std::vector<int> dims{observation_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(box_.dim());
  mean_net_ = Mlp(dims, Activation::Tanh);
  mean_net_.initialize(rng, 0.01);
  // Start around the zero action where the box contains it.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(box_.dim()).cwiseMax(box_.low).cwiseMin(box_.high);
  mean_net_.output_bias() = unsquash(zero);
  log_std_ = Eigen::VectorXd::Constant(box_.dim(), init_log_std);
}

Eigen::VectorXd GaussianPolicy::flat_params() const {
  Eigen::VectorXd p(num_params());
  p << mean_net_.params(), log_std_;
  return p;
}

void GaussianPolicy::set_flat_params(const Eigen::VectorXd& p) {
  if (p.size() != num_params()) throw InvalidArgument("policy parameter vector has the wrong size");
  mean_net_.params() = p.head(mean_net_.num_params());
  log_std_ = p.tail(log_std_.size());
}

Eigen::MatrixXd GaussianPolicy::mean(const Eigen::MatrixXd& obs) const { return mean_net_.forward(obs); }

Eigen::VectorXd GaussianPolicy::squash(const Eigen::VectorXd& u) const {
  const Eigen::ArrayXd mid = 0.5 * (box_.high + box_.low).array();
  const Eigen::ArrayXd half = 0.5 * (box_.high - box_.low).array();
  return (mid + half * u.array().tanh()).matrix().cwiseMax(box_.low).cwiseMin(box_.high);
}

Eigen::VectorXd GaussianPolicy::unsquash(const Eigen::VectorXd& action) const {
  const Eigen::ArrayXd mid = 0.5 * (box_.high + box_.low).array();
  const Eigen::ArrayXd half = 0.5 * (box_.high - box_.low).array();
  const Eigen::ArrayXd t = ((action.array() - mid) / half).cwiseMax(-1.0 + 1e-9).cwiseMin(1.0 - 1e-9);
  return t.atanh().matrix();
}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& u) const {
  const Eigen::MatrixXd mu = mean(obs);
  const Eigen::ArrayXd half = 0.5 * (box_.high - box_.low).array();
  const double norm = log_std_.sum() + box_.dim() * kHalfLog2Pi + half.log().sum();
  Eigen::VectorXd out(u.cols());
  for (Eigen::Index b = 0; b < u.cols(); ++b) {
    double lp = -norm;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double z = (u(i, b) - mu(i, b)) * std::exp(-log_std_[i]);
      lp += -0.5 * z * z - log_sech2(u(i, b));
    }
    out[b] = lp;
  }
  return out;
}

GaussianPolicy::Sample GaussianPolicy::sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const {
  std::normal_distribution<double> n01;
  const Eigen::VectorXd mu = mean(obs);
  Sample s;
  s.u.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) s.u[i] = mu[i] + std::exp(log_std_[i]) * n01(rng);
  s.action = squash(s.u);
  s.log_prob = log_prob(obs, s.u)[0];
  return s;
}

Eigen::VectorXd GaussianPolicy::act(const Eigen::VectorXd& obs) const { return squash(mean(obs).col(0)); }

std::string_view to_string(MultiplierClass c) {
  switch (c) {
    case MultiplierClass::Safe:
      return "safe";
    case MultiplierClass::Boundary:
      return "boundary";
    case MultiplierClass::Unsafe:
      return "unsafe";
  }
  return "?";
}

MultiplierClass classify_multiplier(double lambda, double lambda_max) {
  if (lambda >= lambda_max) return MultiplierClass::Unsafe;
  if (lambda <= 0.0) return MultiplierClass::Safe;
  return MultiplierClass::Boundary;
}

MultiplierHead::MultiplierHead(int observation_dim, const std::vector<int>& hidden, double lambda_max,
                               double margin, std::mt19937_64& rng)
    : lambda_max_(lambda_max), margin_(margin) {
  std::vector<int> dims{observation_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  net_ = Mlp(dims, Activation::Tanh);
  net_.initialize(rng, 0.0);
  net_.output_bias()[0] = -0.5 * margin_;
}

Eigen::VectorXd MultiplierHead::raw(const Eigen::MatrixXd& obs) const { return net_.forward(obs).row(0).transpose(); }

Eigen::VectorXd MultiplierHead::lambda(const Eigen::MatrixXd& obs) const {
  return raw(obs).cwiseMax(0.0).cwiseMin(lambda_max_);
}

std::string_view to_string(Algorithm a) { return a == Algorithm::Ppo ? "ppo" : "ppo-l-si"; }

Algorithm parse_algorithm(std::string_view text) {
  if (text == "ppo") return Algorithm::Ppo;
  if (text == "ppo-l-si") return Algorithm::PpoLagrangian;
  throw ConfigError("unknown algorithm '" + std::string(text) + "' (expected ppo or ppo-l-si)");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(cost_gamma > 0.0 && cost_gamma < 1.0, "cost_gamma must lie in (0, 1)");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip > 0.0, "clip must be positive");
  require(epochs >= 1 && minibatch >= 1 && batch_steps >= 1, "epochs, minibatch and batch_steps must be >= 1");
  require(lr_policy > 0.0 && lr_value > 0.0 && lr_multiplier > 0.0, "learning rates must be positive");
  require(!hidden.empty() && std::all_of(hidden.begin(), hidden.end(), [](int h) { return h > 0; }),
          "hidden layer sizes must be positive");
  require(lambda_max > 0.0 && multiplier_margin >= 0.0 && multiplier_step > 0.0 && multiplier_epochs >= 1,
          "invalid multiplier settings");
  require(cost_threshold >= 0.0, "cost_threshold must be >= 0");
  require(failure_cost >= 0.0, "failure_cost must be >= 0");
  require(total_steps > 0, "total_steps must be positive");
  require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
}

Agent Agent::create(int observation_dim, const BoxSpace& box, const TrainConfig& config) {
  config.validate();
  Agent a;
  a.config = config;
  std::mt19937_64 rng = stream(config.seed, -1, 0);
  a.policy = GaussianPolicy(observation_dim, box, config.hidden, config.init_log_std, rng);
  std::vector<int> dims{observation_dim};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(1);
  a.value = Mlp(dims, Activation::Tanh);
  a.value.initialize(rng);
  a.cost_value = Mlp(dims, Activation::Tanh);
  a.cost_value.initialize(rng);
  a.multiplier = MultiplierHead(observation_dim, config.hidden, config.lambda_max, config.multiplier_margin, rng);
  auto opt = [&](double lr) {
    AdamState s;
    s.learning_rate = lr;
    s.max_grad_norm = config.max_grad_norm;
    return s;
  };
  a.policy_opt = opt(config.lr_policy);
  a.value_opt = opt(config.lr_value);
  a.cost_value_opt = opt(config.lr_value);
  a.multiplier_opt = opt(config.lr_multiplier);
  return a;
}

Batch rollout(CmdpEnv& env, const GaussianPolicy& policy, int n_steps, std::mt19937_64& rng, bool deterministic) {
  const int d = env.observation_dim();
  const int na = policy.box().dim();
  std::vector<double> obs_buf, next_buf, u_buf, act_buf, logp, rew, metric, cost, phi;
  std::vector<char> done, terminal, failure;
  Batch b;
  std::vector<double> obs = env.reset(rng());
  EpisodeSummary ep;
  int t = 0;
  for (; t < n_steps; ++t) {
    const Eigen::VectorXd o = as_vector(obs);
    GaussianPolicy::Sample s;
    if (deterministic) {
      s.u = policy.mean(o).col(0);
      s.action = policy.squash(s.u);
      s.log_prob = policy.log_prob(o, s.u)[0];
    } else {
      s = policy.sample(o, rng);
    }
    CmdpTransition tr;
    try {
      tr = env.step(s.action);
    } catch (const Error& e) {
      spdlog::warn("environment fault, batch truncated at {} steps: {}", t, e.what());
      break;
    }
    obs_buf.insert(obs_buf.end(), obs.begin(), obs.end());
    next_buf.insert(next_buf.end(), tr.observation.begin(), tr.observation.end());
    u_buf.insert(u_buf.end(), s.u.data(), s.u.data() + na);
    act_buf.insert(act_buf.end(), s.action.data(), s.action.data() + na);
    logp.push_back(s.log_prob);
    rew.push_back(tr.reward);
    metric.push_back(tr.metric_reward);
    cost.push_back(tr.cost);
    phi.push_back(tr.safety_index);
    done.push_back(tr.done);
    terminal.push_back(tr.terminal);
    failure.push_back(tr.terminal && tr.failure);
    ep.reward_return += tr.reward;
    ep.metric_return += tr.metric_reward;
    ep.cost_return += tr.cost;
    ++ep.steps;
    ep.failure = ep.failure || tr.failure;
    if (tr.done) {
      b.episodes.push_back(ep);
      ep = {};
      if (t + 1 < n_steps) obs = env.reset(rng());
    } else {
      obs = std::move(tr.observation);
    }
  }
  if (t > 0) done.back() = 1;
  const Eigen::Index n = t;
  b.obs = Eigen::Map<Eigen::MatrixXd>(obs_buf.data(), d, n);
  b.next_obs = Eigen::Map<Eigen::MatrixXd>(next_buf.data(), d, n);
  b.u = Eigen::Map<Eigen::MatrixXd>(u_buf.data(), na, n);
  b.action = Eigen::Map<Eigen::MatrixXd>(act_buf.data(), na, n);
  b.log_prob = Eigen::Map<Eigen::VectorXd>(logp.data(), n);
  b.reward = Eigen::Map<Eigen::VectorXd>(rew.data(), n);
  b.metric_reward = Eigen::Map<Eigen::VectorXd>(metric.data(), n);
  b.cost = Eigen::Map<Eigen::VectorXd>(cost.data(), n);
  b.safety_index = Eigen::Map<Eigen::VectorXd>(phi.data(), n);
  b.done = std::move(done);
  b.terminal = std::move(terminal);
  b.failure = std::move(failure);
  return b;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = *it + gamma * g;
  return g;
}

AdvantageEstimate gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const Eigen::VectorXd& next_values, const std::vector<char>& done, double gamma,
                      double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || next_values.size() != n || static_cast<Eigen::Index>(done.size()) != n) {
    throw InvalidArgument("gae inputs have inconsistent lengths");
  }
  AdvantageEstimate out;
  out.advantages.resize(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * next_values[t] - values[t];
    running = delta + (done[static_cast<std::size_t>(t)] ? 0.0 : gamma * lambda * running);
    out.advantages[t] = running;
  }
  out.targets = out.advantages + values;
  return out;
}

BatchAdvantages estimate_advantages(const Batch& batch, const Agent& agent) {
  const TrainConfig& cfg = agent.config;
  const Eigen::Index n = batch.size();
  auto successor = [&](const Mlp& net, double failure_value) {
    Eigen::VectorXd v = net.forward(batch.next_obs).row(0).transpose();
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto i = static_cast<std::size_t>(t);
      if (batch.terminal[i]) v[t] = batch.failure[i] ? failure_value : 0.0;
    }
    return v;
  };
  const Eigen::VectorXd values = agent.value.forward(batch.obs).row(0).transpose();
  const Eigen::VectorXd cost_values = agent.cost_value.forward(batch.obs).row(0).transpose();
  const AdvantageEstimate r =
      gae(batch.reward, values, successor(agent.value, 0.0), batch.done, cfg.gamma, cfg.gae_lambda);
  const AdvantageEstimate c = gae(batch.cost, cost_values, successor(agent.cost_value, cfg.failure_cost / (1.0 - cfg.cost_gamma)),
                                  batch.done, cfg.cost_gamma, cfg.gae_lambda);
  BatchAdvantages out;
  const double mean = r.advantages.mean();
  const double std = std::sqrt((r.advantages.array() - mean).square().mean());
  out.reward_advantages = (r.advantages.array() - mean) / (std + 1e-8);
  out.reward_targets = r.targets;
  out.cost_advantages = c.advantages;
  out.cost_targets = c.targets;
  out.lambda = cfg.algorithm == Algorithm::PpoLagrangian ? agent.multiplier.lambda(batch.obs)
                                                          : Eigen::VectorXd::Zero(n);
  return out;
}

Eigen::VectorXd surrogate_weights(const Eigen::VectorXd& reward_advantages, const Eigen::VectorXd& cost_advantages,
                                  const Eigen::VectorXd& lambda) {
  return reward_advantages - lambda.cwiseProduct(cost_advantages);
}

LossResult policy_loss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& u,
                       const Eigen::VectorXd& old_log_prob, const Eigen::VectorXd& weights, double clip,
                       double entropy_coef) {
  const Eigen::Index n = u.cols();
  const Eigen::Index na = u.rows();
  MlpCache cache;
  const Eigen::MatrixXd mu = policy.mean_net().forward(obs, cache);
  const Eigen::VectorXd new_log_prob = policy.log_prob(obs, u);
  const Eigen::VectorXd& log_std = policy.log_std();
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();

  LossResult r;
  Eigen::MatrixXd d_mu(na, n);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(na);
  int clipped = 0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const double ratio = std::exp(new_log_prob[b] - old_log_prob[b]);
    const double unclipped = ratio * weights[b];
    const double bounded = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * weights[b];
    r.loss -= std::min(unclipped, bounded) / static_cast<double>(n);
    r.approx_kl += ((ratio - 1.0) - (new_log_prob[b] - old_log_prob[b])) / static_cast<double>(n);
    if (std::abs(ratio - 1.0) > clip) ++clipped;
    // d loss / d log pi for this sample; zero where the clipped term is active.
    const double g = unclipped <= bounded ? -unclipped / static_cast<double>(n) : 0.0;
    for (Eigen::Index i = 0; i < na; ++i) {
      const double diff = u(i, b) - mu(i, b);
      d_mu(i, b) = g * diff * inv_var[i];
      d_log_std[i] += g * (diff * diff * inv_var[i] - 1.0);
    }
  }
  r.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
  if (entropy_coef != 0.0) {
    r.loss -= entropy_coef * (log_std.sum() + static_cast<double>(na) * (0.5 + kHalfLog2Pi));
    d_log_std.array() -= entropy_coef;
  }
  Eigen::VectorXd g_net;
  policy.mean_net().backward(cache, d_mu, g_net);
  r.grad.resize(policy.num_params());
  r.grad << g_net, d_log_std;
  return r;
}

LossResult regression_loss(const Mlp& net, const Eigen::MatrixXd& obs, const Eigen::VectorXd& targets) {
  MlpCache cache;
  const Eigen::VectorXd pred = net.forward(obs, cache).row(0).transpose();
  const Eigen::VectorXd err = pred - targets;
  const double n = static_cast<double>(targets.size());
  LossResult r;
  r.loss = 0.5 * err.squaredNorm() / n;
  net.backward(cache, (err / n).transpose(), r.grad);
  return r;
}

UpdateStats ppo_update(const Batch& batch, const BatchAdvantages& adv, Agent& agent, std::mt19937_64& rng) {
  const TrainConfig& cfg = agent.config;
  const Eigen::Index n = batch.size();
  UpdateStats stats;
  if (n == 0) return stats;
  const Eigen::VectorXd weights = surrogate_weights(adv.reward_advantages, adv.cost_advantages, adv.lambda);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  int count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.minibatch) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.minibatch, n - start);
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + len);
      const Eigen::MatrixXd obs = batch.obs(Eigen::all, idx);

      const LossResult pl = policy_loss(agent.policy, obs, batch.u(Eigen::all, idx), batch.log_prob(idx),
                                        weights(idx), cfg.clip, cfg.entropy_coef);
      Eigen::VectorXd p = agent.policy.flat_params();
      if (guarded_step(agent.policy_opt, p, pl, "policy")) {
        agent.policy.set_flat_params(p);
      } else {
        ++stats.rejected_steps;
      }
      const LossResult vl = regression_loss(agent.value, obs, adv.reward_targets(idx));
      if (!guarded_step(agent.value_opt, agent.value.params(), vl, "value")) ++stats.rejected_steps;
      const LossResult cl = regression_loss(agent.cost_value, obs, adv.cost_targets(idx));
      if (!guarded_step(agent.cost_value_opt, agent.cost_value.params(), cl, "cost value")) ++stats.rejected_steps;

      stats.policy_loss += pl.loss;
      stats.value_loss += vl.loss;
      stats.cost_value_loss += cl.loss;
      stats.approx_kl += pl.approx_kl;
      stats.clip_fraction += pl.clip_fraction;
      ++count;
    }
  }
  stats.policy_loss /= count;
  stats.value_loss /= count;
  stats.cost_value_loss /= count;
  stats.approx_kl /= count;
  stats.clip_fraction /= count;
  return stats;
}

MultiplierStats multiplier_update(const Eigen::MatrixXd& obs, const Eigen::VectorXd& cost_values, Agent& agent,
                                  std::mt19937_64& rng) {
  const TrainConfig& cfg = agent.config;
  MultiplierHead& head = agent.multiplier;
  MultiplierStats stats;
  const Eigen::Index n = obs.cols();
  if (n == 0) return stats;
  const Eigen::VectorXd raw = head.raw(obs);
  stats.mean_before = raw.cwiseMax(0.0).cwiseMin(head.lambda_max()).mean();
  const Eigen::VectorXd targets =
      (raw.array() + cfg.multiplier_step * (cost_values.array() - cfg.cost_threshold))
          .cwiseMax(-head.margin())
          .cwiseMin(head.lambda_max() + head.margin());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int epoch = 0; epoch < cfg.multiplier_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.minibatch) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.minibatch, n - start);
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + len);
      const LossResult l = regression_loss(head.net(), obs(Eigen::all, idx), targets(idx));
      guarded_step(agent.multiplier_opt, head.net().params(), l, "multiplier");
    }
  }
  stats.mean_after = head.lambda(obs).mean();
  return stats;
}

Trainer::Trainer(EnvFactory factory, const TrainConfig& config) : factory_(std::move(factory)) {
  env_ = factory_();
  agent_ = Agent::create(env_->observation_dim(), env_->action_space(), config);
}

Trainer::Trainer(EnvFactory factory, Agent agent, std::vector<CurveRow> curve)
    : factory_(std::move(factory)), agent_(std::move(agent)), curve_(std::move(curve)) {
  agent_.config.validate();
  env_ = factory_();
  if (env_->observation_dim() != agent_.policy.mean_net().input_dim()) {
    throw ConfigError("checkpoint does not match the environment's observation size");
  }
}

CurveRow Trainer::iterate() {
  const TrainConfig& cfg = agent_.config;
  const int it = agent_.iteration;
  std::mt19937_64 sample_rng = stream(cfg.seed, it, 1);
  const Batch batch = rollout(*env_, agent_.policy, cfg.batch_steps, sample_rng);
  const BatchAdvantages adv = estimate_advantages(batch, agent_);
  std::mt19937_64 update_rng = stream(cfg.seed, it, 2);
  const UpdateStats stats = ppo_update(batch, adv, agent_, update_rng);
  if (cfg.algorithm == Algorithm::PpoLagrangian) {
    std::mt19937_64 multiplier_rng = stream(cfg.seed, it, 3);
    multiplier_update(batch.obs, adv.cost_targets, agent_, multiplier_rng);
  }
  agent_.steps += batch.size();
  agent_.iteration = it + 1;

  CurveRow row;
  row.iteration = agent_.iteration;
  row.steps = agent_.steps;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.episodic_return = nan;
  row.episodic_cost = nan;
  row.episode_steps = nan;
  double failures = 0.0;
  if (!batch.episodes.empty()) {
    double ret = 0.0;
    double len = 0.0;
    for (const auto& e : batch.episodes) {
      ret += e.metric_return;
      len += e.steps;
      failures += e.failure ? 1.0 : 0.0;
    }
    const double k = static_cast<double>(batch.episodes.size());
    row.episodic_return = ret / k;
    row.episodic_cost = failures / k;
    row.episode_steps = len / k;
  }
  row.cost_rate = batch.size() > 0 ? failures / static_cast<double>(batch.size()) : nan;
  row.mean_lambda = batch.size() > 0 ? agent_.multiplier.lambda(batch.obs).mean() : 0.0;
  if (cfg.algorithm == Algorithm::Ppo) row.mean_lambda = 0.0;
  spdlog::debug("{} iteration {} steps {} return {:.3f} cost {:.3f} kl {:.4f} lambda {:.3f}", to_string(cfg.algorithm),
                row.iteration, row.steps, row.episodic_return, row.episodic_cost, stats.approx_kl, row.mean_lambda);
  curve_.push_back(row);
  return row;
}

ControlInput LearnedDrivingPolicy::act(const World&, const Observation& obs, const Scenario& scenario) const {
  const std::vector<double> f = obs.features(scenario);
  const Eigen::VectorXd a = policy_.act(as_vector(f));
  return {a[0], a[1]};
}

ControlInput LaneChangePolicy::act(const World& world, const Observation&, const Scenario&) const {
  return {lane_steering(world.ego, target_y_), 0.0};
}

Trajectory policy_rollout_reference(const DrivingPolicy& policy, const World& world, const Scenario& scenario,
                                    int horizon, double t0, double max_departure) {
  World w = world;
  for (auto& t : w.traffic) t.state.phi = 0.0;
  // As in the MPC prediction, the follower in the ego's lane is not an
  // obstacle: at constant velocity it would drive through the ego.
  int follower = -1;
  const int lane = scenario.lane_of(world.ego.y);
  if (lane >= 0) follower = build_observation(world, scenario).neighbors[static_cast<std::size_t>(2 * lane + 1)].vehicle;
  Trajectory traj;
  traj.states.push_back(w.ego);
  traj.timestamps.push_back(t0);
  for (int k = 0; k < horizon; ++k) {
    const Observation obs = build_observation(w, scenario);
    const ControlInput u = policy.act(w, obs, scenario);
    if (!u.finite()) throw RolloutError("policy produced a non-finite action");
    w.ego = step(w.ego, u, scenario.geometry, scenario.dt);
    for (auto& t : w.traffic) t.state.x += t.state.v * scenario.dt;
    if (!w.ego.finite()) throw RolloutError("policy rollout produced a non-finite state");
    if (road_departure(w.ego, scenario) > max_departure) throw RolloutError("policy rollout leaves the road");
    for (std::size_t i = 0; i < w.traffic.size(); ++i) {
      if (static_cast<int>(i) != follower && footprints_overlap(w.ego, w.traffic[i].state, scenario.geometry)) {
        throw RolloutError("policy rollout collides");
      }
    }
    traj.controls.push_back(u);
    traj.states.push_back(w.ego);
    traj.timestamps.push_back(t0 + (k + 1) * scenario.dt);
  }
  return traj;
}

}  // namespace srmpc
