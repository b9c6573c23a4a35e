#include "srmpc/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "srmpc/error.hpp"
#include "srmpc/io.hpp"

namespace srmpc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view text) {
  const std::string t = trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) throw ConfigError("bad number '" + t + "'");
  return value;
}

bool parse_bool(std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError("bad boolean '" + t + "'");
}

template <class T>
std::vector<T> parse_list(std::string_view text) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_number<T>(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
std::string format_list(const T& values) {
  std::string out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(values.size()); ++i) {
    out += (i ? "," : "") + fmt::format("{}", values[static_cast<Eigen::Index>(i)]);
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(AppConfig&, std::string_view)> set;
  std::function<std::string(const AppConfig&)> get;
};

template <class T>
Field number(std::string section, std::string key, std::function<T&(AppConfig&)> ref) {
  return {std::move(section), std::move(key), [ref](AppConfig& c, std::string_view v) { ref(c) = parse_number<T>(v); },
          [ref](const AppConfig& c) { return fmt::format("{}", ref(const_cast<AppConfig&>(c))); }};
}

Field flag(std::string section, std::string key, std::function<bool&(AppConfig&)> ref) {
  return {std::move(section), std::move(key), [ref](AppConfig& c, std::string_view v) { ref(c) = parse_bool(v); },
          [ref](const AppConfig& c) { return std::string(ref(const_cast<AppConfig&>(c)) ? "true" : "false"); }};
}

template <int N>
Field fixed_vector(std::string section, std::string key, std::function<Eigen::Matrix<double, N, 1>&(AppConfig&)> ref) {
  return {std::move(section), std::move(key),
          [ref, key](AppConfig& c, std::string_view v) {
            const auto values = parse_list<double>(v);
            if (values.size() != N) throw ConfigError(fmt::format("{} needs {} comma-separated values", key, N));
            for (int i = 0; i < N; ++i) ref(c)[i] = values[static_cast<std::size_t>(i)];
          },
          [ref](const AppConfig& c) { return format_list(ref(const_cast<AppConfig&>(c))); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"scenario", "density",
                 [](AppConfig& c, std::string_view v) {
                   c.scenario = parse_density(trim(v)) == TrafficDensity::Light ? Scenario::light() : Scenario::dense();
                 },
                 [](const AppConfig& c) { return std::string(to_string(c.scenario.traffic_density)); }});
#define SC(name, type) f.push_back(number<type>("scenario", #name, [](AppConfig& c) -> type& { return c.scenario.name; }))
    SC(lane_width, double);
    SC(road_length, double);
    SC(spawn_spacing_mean, double);
    SC(spawn_spacing_rel_std, double);
    SC(spawn_speed_min, double);
    SC(spawn_speed_max, double);
    SC(spawn_behind, double);
    SC(spawn_ahead, double);
    SC(v_ref, double);
    SC(y_ref, double);
    SC(max_steps, int);
    SC(dt, double);
    SC(sensing_range, double);
    SC(reward_balance, double);
    SC(reward_scale, double);
#undef SC
#define SI(name) f.push_back(number<double>("si", #name, [](AppConfig& c) -> double& { return c.scenario.si.name; }))
    SI(sigma);
    SI(n);
    SI(k);
    SI(d_min);
    SI(eta);
#undef SI
#define MPC(name, type) f.push_back(number<type>("mpc", #name, [](AppConfig& c) -> type& { return c.mpc.name; }))
    MPC(horizon, int);
    f.push_back(fixed_vector<4>("mpc", "q", [](AppConfig& c) -> Eigen::Vector4d& { return c.mpc.q; }));
    f.push_back(fixed_vector<2>("mpc", "r", [](AppConfig& c) -> Eigen::Vector2d& { return c.mpc.r; }));
    f.push_back(fixed_vector<2>("mpc", "s", [](AppConfig& c) -> Eigen::Vector2d& { return c.mpc.s; }));
    MPC(hard_slack_weight, double);
    MPC(soft_slack_weight, double);
    MPC(road_slack_weight, double);
    MPC(heading_max, double);
    MPC(exponent, double);
    MPC(safety_margin_ratio, double);
    MPC(activation_radius, double);
    MPC(fallback_after, int);
#undef MPC
    f.push_back(number<double>("mpc", "braking_a", [](AppConfig& c) -> double& { return c.mpc.braking.a; }));
#define QP(name, type) f.push_back(number<type>("mpc", "qp_" #name, [](AppConfig& c) -> type& { return c.mpc.qp.name; }))
    QP(rho, double);
    QP(alpha, double);
    QP(eps_abs, double);
    QP(eps_rel, double);
    QP(max_iter, int);
#undef QP
    f.push_back(flag("mpc", "qp_polish", [](AppConfig& c) -> bool& { return c.mpc.qp.polish; }));
    f.push_back({"mpc", "dump_dir", [](AppConfig& c, std::string_view v) { c.mpc.dump_dir = trim(v); },
                 [](const AppConfig& c) { return c.mpc.dump_dir; }});
    f.push_back({"train", "algorithm", [](AppConfig& c, std::string_view v) { c.train.algorithm = parse_algorithm(trim(v)); },
                 [](const AppConfig& c) { return std::string(to_string(c.train.algorithm)); }});
#define TR(name, type) f.push_back(number<type>("train", #name, [](AppConfig& c) -> type& { return c.train.name; }))
    TR(gamma, double);
    TR(cost_gamma, double);
    TR(gae_lambda, double);
    TR(clip, double);
    TR(epochs, int);
    TR(minibatch, int);
    TR(batch_steps, int);
    TR(lr_policy, double);
    TR(lr_value, double);
    TR(lr_multiplier, double);
    TR(max_grad_norm, double);
    TR(entropy_coef, double);
    TR(init_log_std, double);
    TR(lambda_max, double);
    TR(multiplier_step, double);
    TR(multiplier_margin, double);
    TR(multiplier_epochs, int);
    TR(cost_threshold, double);
    TR(failure_cost, double);
    TR(total_steps, long);
    TR(seed, std::uint64_t);
    TR(checkpoint_every, int);
#undef TR
    f.push_back({"train", "hidden", [](AppConfig& c, std::string_view v) { c.train.hidden = parse_list<int>(v); },
                 [](const AppConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.train.hidden.size(); ++i) out += (i ? "," : "") + std::to_string(c.train.hidden[i]);
                   return out;
                 }});
    return f;
  }();
  return table;
}

}  // namespace

AppConfig parse_config(std::string_view ini, std::optional<TrafficDensity> density) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(ini)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::set<std::string> known;
  for (const auto& f : fields()) known.insert(f.section + "." + f.key);
  for (const auto& [section, body] : tree) {
    if (section != "scenario" && section != "mpc" && section != "si" && section != "train") {
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!known.contains(section + "." + key)) throw ConfigError("config: unknown key " + section + "." + key);
    }
  }

  AppConfig c;
  bool mpc_seen = false;
  for (const auto& f : fields()) {
    if (f.section == "mpc" && !mpc_seen) {
      // MPC defaults follow the scenario fixed so far.
      c.mpc = OcpConfig::for_scenario(c.scenario);
      mpc_seen = true;
    }
    auto value = tree.get_optional<std::string>(pt::ptree::path_type(f.section + "." + f.key, '.'));
    if (density && f.section == "scenario" && f.key == "density") value = std::string(to_string(*density));
    if (!value) continue;
    try {
      f.set(c, *value);
    } catch (const Error& e) {
      throw ConfigError(fmt::format("config: {}.{}: {}", f.section, f.key, e.what()));
    }
  }
  c.mpc.fit_road(c.scenario);
  c.scenario.validate();
  c.scenario.si.validate();
  c.mpc.validate();
  try {
    c.train.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path, std::optional<TrafficDensity> density) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_file(path), density);
}

std::string config_to_ini(const AppConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + fmt::format("[{}]\n", f.section);
      section = f.section;
    }
    out += fmt::format("{} = {}\n", f.key, f.get(config));
  }
  return out;
}

std::string app_config_hash(const AppConfig& config) { return fnv1a_hex(config_to_ini(config)); }

}  // namespace srmpc
