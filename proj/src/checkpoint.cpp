#include "srmpc/checkpoint.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "srmpc/error.hpp"
#include "srmpc/io.hpp"

namespace srmpc {
namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mlp_json(const Mlp& net) {
  return {{"dims", net.dims()},
          {"activation", net.hidden_activation() == Activation::Tanh ? "tanh" : "identity"},
          {"params", vector_json(net.params())}};
}

Mlp mlp_from(const json& j) {
  const std::string act = j.at("activation").get<std::string>();
  if (act != "tanh" && act != "identity") throw InvalidArgument("unknown activation " + act);
  Mlp net(j.at("dims").get<std::vector<int>>(), act == "tanh" ? Activation::Tanh : Activation::Identity);
  const Eigen::VectorXd p = vector_from(j.at("params"));
  if (p.size() != net.num_params()) throw InvalidArgument("network parameter count mismatch");
  net.params() = p;
  return net;
}

json adam_json(const AdamState& s) {
  return {{"learning_rate", s.learning_rate}, {"beta1", s.beta1},       {"beta2", s.beta2},
          {"epsilon", s.epsilon},             {"max_grad_norm", s.max_grad_norm}, {"t", s.t},
          {"m", vector_json(s.m)},            {"v", vector_json(s.v)}};
}

AdamState adam_from(const json& j) {
  AdamState s;
  s.learning_rate = j.at("learning_rate");
  s.beta1 = j.at("beta1");
  s.beta2 = j.at("beta2");
  s.epsilon = j.at("epsilon");
  s.max_grad_norm = j.at("max_grad_norm");
  s.t = j.at("t");
  s.m = vector_from(j.at("m"));
  s.v = vector_from(j.at("v"));
  return s;
}

// NaN is not representable in JSON.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json curve_json(const std::vector<CurveRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({r.iteration, r.steps, number_or_null(r.episodic_return), number_or_null(r.episodic_cost),
                   number_or_null(r.cost_rate), number_or_null(r.episode_steps), number_or_null(r.mean_lambda)});
  }
  return out;
}

std::vector<CurveRow> curve_from(const json& j) {
  std::vector<CurveRow> rows;
  for (const auto& e : j) {
    CurveRow r;
    r.iteration = e.at(0);
    r.steps = e.at(1);
    r.episodic_return = number_from(e.at(2));
    r.episodic_cost = number_from(e.at(3));
    r.cost_rate = number_from(e.at(4));
    r.episode_steps = number_from(e.at(5));
    r.mean_lambda = number_from(e.at(6));
    rows.push_back(r);
  }
  return rows;
}

std::string format_value(double x) { return std::isfinite(x) ? fmt::format("{}", x) : "nan"; }

}  // namespace

json train_config_to_json(const TrainConfig& c) {
  return {{"algorithm", to_string(c.algorithm)},
          {"gamma", c.gamma},
          {"cost_gamma", c.cost_gamma},
          {"gae_lambda", c.gae_lambda},
          {"clip", c.clip},
          {"epochs", c.epochs},
          {"minibatch", c.minibatch},
          {"batch_steps", c.batch_steps},
          {"lr_policy", c.lr_policy},
          {"lr_value", c.lr_value},
          {"lr_multiplier", c.lr_multiplier},
          {"max_grad_norm", c.max_grad_norm},
          {"entropy_coef", c.entropy_coef},
          {"init_log_std", c.init_log_std},
          {"hidden", c.hidden},
          {"lambda_max", c.lambda_max},
          {"multiplier_step", c.multiplier_step},
          {"multiplier_margin", c.multiplier_margin},
          {"multiplier_epochs", c.multiplier_epochs},
          {"cost_threshold", c.cost_threshold},
          {"failure_cost", c.failure_cost},
          {"total_steps", c.total_steps},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig c;
  const json defaults = train_config_to_json(c);
  for (const auto& [key, value] : doc.items()) {
    if (!defaults.contains(key)) throw InvalidArgument("unknown train config key " + key);
  }
  try {
    if (doc.contains("algorithm")) c.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("gamma", c.gamma);
    get("cost_gamma", c.cost_gamma);
    get("gae_lambda", c.gae_lambda);
    get("clip", c.clip);
    get("epochs", c.epochs);
    get("minibatch", c.minibatch);
    get("batch_steps", c.batch_steps);
    get("lr_policy", c.lr_policy);
    get("lr_value", c.lr_value);
    get("lr_multiplier", c.lr_multiplier);
    get("max_grad_norm", c.max_grad_norm);
    get("entropy_coef", c.entropy_coef);
    get("init_log_std", c.init_log_std);
    get("hidden", c.hidden);
    get("lambda_max", c.lambda_max);
    get("multiplier_step", c.multiplier_step);
    get("multiplier_margin", c.multiplier_margin);
    get("multiplier_epochs", c.multiplier_epochs);
    get("cost_threshold", c.cost_threshold);
    get("failure_cost", c.failure_cost);
    get("total_steps", c.total_steps);
    get("seed", c.seed);
    get("checkpoint_every", c.checkpoint_every);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad train config: ") + e.what());
  }
  return c;
}

std::string config_hash(const TrainConfig& config) { return fnv1a_hex(train_config_to_json(config).dump()); }

json checkpoint_to_json(const Agent& agent, const std::vector<CurveRow>& curve) {
  const BoxSpace& box = agent.policy.box();
  return {{"schema", kCheckpointSchema},
          {"config", train_config_to_json(agent.config)},
          {"config_hash", config_hash(agent.config)},
          {"iteration", agent.iteration},
          {"steps", agent.steps},
          {"action_low", vector_json(box.low)},
          {"action_high", vector_json(box.high)},
          {"policy", {{"mean", mlp_json(agent.policy.mean_net())}, {"log_std", vector_json(agent.policy.log_std())}}},
          {"value", mlp_json(agent.value)},
          {"cost_value", mlp_json(agent.cost_value)},
          {"multiplier",
           {{"net", mlp_json(agent.multiplier.net())},
            {"lambda_max", agent.multiplier.lambda_max()},
            {"margin", agent.multiplier.margin()}}},
          {"optimizers",
           {{"policy", adam_json(agent.policy_opt)},
            {"value", adam_json(agent.value_opt)},
            {"cost_value", adam_json(agent.cost_value_opt)},
            {"multiplier", adam_json(agent.multiplier_opt)}}},
          {"curve", curve_json(curve)}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("schema") != kCheckpointSchema) throw InvalidArgument("unsupported checkpoint schema");
    Checkpoint cp;
    Agent& a = cp.agent;
    a.config = train_config_from_json(doc.at("config"));
    if (doc.at("config_hash").get<std::string>() != config_hash(a.config)) {
      throw InvalidArgument("checkpoint config hash mismatch");
    }
    a.iteration = doc.at("iteration");
    a.steps = doc.at("steps");
    BoxSpace box{vector_from(doc.at("action_low")), vector_from(doc.at("action_high"))};
    const Mlp mean = mlp_from(doc.at("policy").at("mean"));
    std::mt19937_64 unused;
    a.policy = GaussianPolicy(mean.input_dim(), box, a.config.hidden, a.config.init_log_std, unused);
    if (a.policy.mean_net().dims() != mean.dims()) throw InvalidArgument("policy shape mismatch");
    a.policy.mean_net() = mean;
    a.policy.log_std() = vector_from(doc.at("policy").at("log_std"));
    if (a.policy.log_std().size() != box.dim()) throw InvalidArgument("log_std size mismatch");
    a.value = mlp_from(doc.at("value"));
    a.cost_value = mlp_from(doc.at("cost_value"));
    const json& m = doc.at("multiplier");
    a.multiplier = MultiplierHead(mean.input_dim(), a.config.hidden, m.at("lambda_max"), m.at("margin"), unused);
    a.multiplier.net() = mlp_from(m.at("net"));
    const json& o = doc.at("optimizers");
    a.policy_opt = adam_from(o.at("policy"));
    a.value_opt = adam_from(o.at("value"));
    a.cost_value_opt = adam_from(o.at("cost_value"));
    a.multiplier_opt = adam_from(o.at("multiplier"));
    cp.curve = curve_from(doc.at("curve"));
    return cp;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Agent& agent, const std::vector<CurveRow>& curve) {
  write_file_atomic(path, checkpoint_to_json(agent, curve).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_json_file(path)); }

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out = "iteration,steps,J_r,J_c,rho_c,n_steps,mean_lambda\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.iteration, r.steps, format_value(r.episodic_return),
                       format_value(r.episodic_cost), format_value(r.cost_rate), format_value(r.episode_steps),
                       format_value(r.mean_lambda));
  }
  return out;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows) {
  write_file_atomic(path, curve_csv(rows));
}

std::vector<CurveRow> read_curve_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "iteration,steps,J_r,J_c,rho_c,n_steps,mean_lambda") {
    throw InvalidArgument("unexpected curve header in " + path.string());
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw InvalidArgument("curve row with " + std::to_string(cells.size()) + " columns");
    auto num = [](const std::string& s) { return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s); };
    CurveRow r;
    r.iteration = std::stoi(cells[0]);
    r.steps = std::stol(cells[1]);
    r.episodic_return = num(cells[2]);
    r.episodic_cost = num(cells[3]);
    r.cost_rate = num(cells[4]);
    r.episode_steps = num(cells[5]);
    r.mean_lambda = num(cells[6]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<CurveRow> train(const EnvFactory& factory, const TrainConfig& config,
                            const std::filesystem::path& out_dir, bool resume) {
  const auto latest = out_dir / "checkpoint.json";
  std::unique_ptr<Trainer> trainer;
  if (resume && std::filesystem::exists(latest)) {
    Checkpoint cp = load_checkpoint(latest);
    if (config_hash(cp.agent.config) != config_hash(config)) {
      throw ConfigError("resume requested with a config that differs from the checkpoint");
    }
    spdlog::info("resuming {} from iteration {}", latest.string(), cp.agent.iteration);
    trainer = std::make_unique<Trainer>(factory, std::move(cp.agent), std::move(cp.curve));
  } else {
    trainer = std::make_unique<Trainer>(factory, config);
  }
  auto snapshot = [&] {
    const Agent& a = trainer->agent();
    save_checkpoint(out_dir / fmt::format("checkpoint_{:05d}.json", a.iteration), a, trainer->curve());
    save_checkpoint(latest, a, trainer->curve());
    write_curve_csv(out_dir / "curve.csv", trainer->curve());
  };
  while (!trainer->finished()) {
    const CurveRow row = trainer->iterate();
    spdlog::info("{} iter {} steps {} J_r {:.2f} J_c {:.3f} rho_c {:.5f} n {:.1f} lambda {:.3f}",
                 to_string(config.algorithm), row.iteration, row.steps, row.episodic_return, row.episodic_cost,
                 row.cost_rate, row.episode_steps, row.mean_lambda);
    if (row.iteration % config.checkpoint_every == 0 || trainer->finished()) snapshot();
  }
  return trainer->curve();
}

}  // namespace srmpc
