#include "pl2o/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace pl2o {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  const std::size_t pos = line.find_first_of("#;");
  return pos == std::string::npos ? line : line.substr(0, pos);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "' in [" + section + "]");
  }
}

std::uint64_t parse_u64(const std::string& section, const std::string& key,
                        const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for '" + key + "' in [" + section + "]");
  }
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_flag(const std::string& section, const std::string& key,
                const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("config: bad flag value for '" + key + "' in [" + section + "]");
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;

  auto fail_key = [&](const std::string& key) {
    throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section != "data" && section != "problem" && section != "train" &&
          section != "penalty" && section != "projector" && section != "solver" &&
          section != "sweep" && section != "run")
        throw ConfigError("config: unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: empty key or value at line " + std::to_string(lineno));
    if (section.empty())
      throw ConfigError("config: key '" + key + "' outside any section");

    if (section == "data") {
      if (key == "k") cfg.data_antennas = parse_u64(section, key, value);
      else if (key == "n") cfg.data_users = parse_u64(section, key, value);
      else if (key == "count") cfg.data_count = parse_u64(section, key, value);
      else if (key == "sigma2") cfg.data_sigma2 = parse_double(section, key, value);
      else if (key == "gamma") cfg.data_gamma = parse_double(section, key, value);
      else if (key == "seed") cfg.data_seed = parse_u64(section, key, value);
      else fail_key(key);
    } else if (section == "problem") {
      if (key == "variant") {
        if (value == "eve_sinr_min") cfg.problem.variant = ProblemVariant::kEveSinrMin;
        else if (value == "green_power") cfg.problem.variant = ProblemVariant::kGreenPower;
        else throw ConfigError("config: unknown problem variant '" + value + "'");
      } else if (key == "sparsity_weight") {
        cfg.problem.sparsity_weight = parse_double(section, key, value);
      } else if (key == "smooth_delta") {
        cfg.problem.smooth_delta = parse_double(section, key, value);
      } else {
        fail_key(key);
      }
    } else if (section == "train") {
      if (key == "mode") {
        if (value != "l2o" && value != "penalty")
          throw ConfigError("config: unknown train mode '" + value + "'");
        cfg.train_mode = value;
      } else if (key == "learn_rate") cfg.train.learn_rate = parse_double(section, key, value);
      else if (key == "batch_size") cfg.train.batch_size = parse_u64(section, key, value);
      else if (key == "epochs") cfg.train.epochs = parse_u64(section, key, value);
      else if (key == "clip_beta") cfg.train.clip_beta = parse_double(section, key, value);
      else if (key == "eps") cfg.train.eps = parse_double(section, key, value);
      else if (key == "seed") cfg.train.seed = parse_u64(section, key, value);
      else if (key == "hidden") {
        cfg.train.hidden.clear();
        for (const auto& item : split_list(value))
          cfg.train.hidden.push_back(parse_u64(section, key, item));
        if (cfg.train.hidden.empty())
          throw ConfigError("config: 'hidden' needs at least one width");
      } else if (key == "infeasible_grad") {
        if (value == "t_scaled") cfg.train.infeasible_grad = InfeasibleGradMode::kTScaled;
        else if (value == "at_projection")
          cfg.train.infeasible_grad = InfeasibleGradMode::kAtProjection;
        else throw ConfigError("config: unknown infeasible_grad '" + value + "'");
      } else fail_key(key);
    } else if (section == "penalty") {
      if (key == "penalty_weight") cfg.penalty_weight = parse_double(section, key, value);
      else fail_key(key);
    } else if (section == "projector") {
      if (key == "feas_tol") cfg.projector.feas_tol = parse_double(section, key, value);
      else if (key == "newton_tol") cfg.projector.newton_tol = parse_double(section, key, value);
      else if (key == "barrier_mu") cfg.projector.barrier_mu = parse_double(section, key, value);
      else if (key == "max_newton")
        cfg.projector.max_newton = static_cast<int>(parse_u64(section, key, value));
      else if (key == "max_stages")
        cfg.projector.max_stages = static_cast<int>(parse_u64(section, key, value));
      else fail_key(key);
    } else if (section == "solver") {
      if (key == "max_outer")
        cfg.solver.max_outer = static_cast<int>(parse_u64(section, key, value));
      else if (key == "inner_tol") cfg.solver.inner_tol = parse_double(section, key, value);
      else if (key == "trust_radius") cfg.solver.trust_radius = parse_double(section, key, value);
      else if (key == "shrink") cfg.solver.shrink = parse_double(section, key, value);
      else if (key == "grow") cfg.solver.grow = parse_double(section, key, value);
      else fail_key(key);
    } else if (section == "sweep") {
      if (key == "axis") {
        if (value != "K" && value != "N" && value != "gamma")
          throw ConfigError("config: unknown sweep axis '" + value + "'");
        cfg.sweep.axis = value;
      } else if (key == "values") {
        cfg.sweep.values.clear();
        for (const auto& item : split_list(value))
          cfg.sweep.values.push_back(parse_double(section, key, item));
      } else if (key == "algorithms") {
        cfg.sweep.algorithms = split_list(value);
        for (const auto& a : cfg.sweep.algorithms)
          if (a != "l2o" && a != "penalty" && a != "sca" && a != "trust")
            throw ConfigError("config: unknown algorithm '" + a + "'");
      } else if (key == "eval_count") cfg.sweep.eval_count = parse_u64(section, key, value);
      else if (key == "train_count") cfg.sweep.train_count = parse_u64(section, key, value);
      else if (key == "timing") cfg.sweep.timing = parse_flag(section, key, value);
      else fail_key(key);
    } else if (section == "run") {
      if (key == "threads") cfg.threads = static_cast<int>(parse_u64(section, key, value));
      else fail_key(key);
    }
  }

  // Cross-field wiring and validation.
  cfg.train.problem = cfg.problem;
  cfg.train.projector = cfg.projector;
  cfg.train.threads = cfg.threads;
  cfg.solver.projector = cfg.projector;
  cfg.sweep.base_antennas = cfg.data_antennas;
  cfg.sweep.base_users = cfg.data_users;
  cfg.sweep.sigma2 = cfg.data_sigma2;
  cfg.sweep.gamma = cfg.data_gamma;
  cfg.sweep.seed = cfg.data_seed;
  cfg.sweep.train = cfg.train;
  cfg.sweep.penalty_weight = cfg.penalty_weight;
  cfg.sweep.solver = cfg.solver;
  cfg.sweep.problem = cfg.problem;
  cfg.sweep.threads = cfg.threads;

  if (cfg.data_antennas < 1 || cfg.data_users < 1)
    throw ConfigError("config: [data] k and n must be >= 1");
  if (cfg.data_count < 1) throw ConfigError("config: [data] count must be >= 1");
  if (cfg.data_sigma2 <= 0.0) throw ConfigError("config: [data] sigma2 must be > 0");
  if (cfg.data_gamma <= 0.0) throw ConfigError("config: [data] gamma must be > 0");
  if (cfg.problem.sparsity_weight < 0.0)
    throw ConfigError("config: [problem] sparsity_weight must be >= 0");
  if (cfg.problem.smooth_delta <= 0.0)
    throw ConfigError("config: [problem] smooth_delta must be > 0");
  if (cfg.train.learn_rate <= 0.0)
    throw ConfigError("config: [train] learn_rate must be > 0");
  if (cfg.train.batch_size < 1)
    throw ConfigError("config: [train] batch_size must be >= 1");
  if (cfg.train.clip_beta <= 0.0)
    throw ConfigError("config: [train] clip_beta must be > 0");
  if (cfg.train.eps <= 0.0) throw ConfigError("config: [train] eps must be > 0");
  if (cfg.penalty_weight <= 0.0)
    throw ConfigError("config: [penalty] penalty_weight must be > 0");
  if (cfg.projector.feas_tol <= 0.0 || cfg.projector.newton_tol <= 0.0)
    throw ConfigError("config: [projector] tolerances must be > 0");
  if (cfg.projector.barrier_mu <= 1.0)
    throw ConfigError("config: [projector] barrier_mu must exceed 1");
  if (cfg.projector.max_newton < 1 || cfg.projector.max_stages < 1)
    throw ConfigError("config: [projector] iteration budgets must be >= 1");
  if (cfg.solver.trust_radius <= 0.0)
    throw ConfigError("config: [solver] trust_radius must be > 0");
  if (cfg.solver.shrink <= 0.0 || cfg.solver.shrink >= 1.0)
    throw ConfigError("config: [solver] shrink must lie in (0, 1)");
  if (cfg.solver.grow <= 1.0) throw ConfigError("config: [solver] grow must exceed 1");
  if (cfg.sweep.values.empty())
    throw ConfigError("config: [sweep] values must be nonempty");

  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace pl2o
