#pragma once

// Run configuration, read from an INI file:
//
//   [grid]      p_max h_inertia damping p_m_mean omega_b omega_s   (required)
//   [ou]        sigma lambda                                        (required)
//   [sim]       dt t_end seed init_theta init_omega                 (required)
//               init_pm_mode = stationary | fixed, init_pm_value
//   [ensemble]  n threads path
//   [scenario]  case cutoff_time horizon_end obs_stride target_stride
//               truth_realization extra_obs_count seed obs_noise_rel
//   [baseline]  family = exponential | squared_exponential
//               mean_model = constant | zero
//   [output]    dir
//
// Without a file every value takes its default, which reproduces the
// reference setup. Unknown sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "swinggp/errors.hpp"
#include "swinggp/kernel.hpp"
#include "swinggp/scenarios.hpp"
#include "swinggp/sde.hpp"

namespace swinggp {

struct RunConfig {
  GridParams grid;
  OuParams ou;
  SimConfig sim;
  std::size_t ensemble_n = 1000;
  unsigned threads = 0;  // 0: hardware concurrency; never affects results
  std::optional<std::filesystem::path> ensemble_path;  // load instead of simulating
  ScenarioSpec scenario;
  BaselineOptions baseline;
  std::filesystem::path output_dir = "out";

  void validate() const {
    grid.validate();
    ou.validate();
    sim.validate();
    scenario.validate();
    if (ensemble_n < 2) throw ConfigError("ensemble.n must be >= 2");
  }
};

namespace detail {

namespace pt = boost::property_tree;

class IniReader {
public:
  explicit IniReader(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  void get(const std::string& key, T& out, bool required) {
    seen_.insert(key);
    const auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'));
    if (!node) {
      if (required) throw ConfigError("missing required field '" + key + "'");
      return;
    }
    const std::string raw = node->get_value<std::string>();
    if constexpr (std::is_unsigned_v<T>) {
      if (raw.find('-') != std::string::npos) throw ConfigError("field '" + key + "': must be non-negative, got '" + raw + "'");
    }
    const auto parsed = node->get_value_optional<T>();
    if (!parsed) throw ConfigError("field '" + key + "': cannot parse '" + raw + "'");
    out = *parsed;
  }

  void get_string(const std::string& key, std::string& out) {
    seen_.insert(key);
    if (const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) out = *v;
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ConfigError("key '" + section + "' must be inside a [section]");
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!seen_.count(full)) throw ConfigError("unknown config field '" + full + "'");
      }
    }
  }

private:
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses INI text. Grid, O-U and simulation fields are required; the rest default.
[[nodiscard]] inline RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }

  RunConfig c;
  detail::IniReader r(tree);
  r.get("grid.p_max", c.grid.p_max, true);
  r.get("grid.h_inertia", c.grid.h_inertia, true);
  r.get("grid.damping", c.grid.damping, true);
  r.get("grid.p_m_mean", c.grid.p_m_mean, true);
  r.get("grid.omega_b", c.grid.omega_b, true);
  r.get("grid.omega_s", c.grid.omega_s, true);
  r.get("ou.sigma", c.ou.sigma, true);
  r.get("ou.lambda", c.ou.lambda, true);
  r.get("sim.dt", c.sim.dt, true);
  r.get("sim.t_end", c.sim.t_end, true);
  r.get("sim.seed", c.sim.seed, true);
  r.get("sim.init_theta", c.sim.init_theta, true);
  r.get("sim.init_omega", c.sim.init_omega, true);
  std::string mode = "stationary";
  r.get_string("sim.init_pm_mode", mode);
  if (mode == "fixed") {
    c.sim.init_pm_mode = InitPmMode::Fixed;
  } else if (mode != "stationary") {
    throw ConfigError("field 'sim.init_pm_mode': expected 'stationary' or 'fixed', got '" + mode + "'");
  }
  r.get("sim.init_pm_value", c.sim.init_pm_value, false);

  r.get("ensemble.n", c.ensemble_n, false);
  r.get("ensemble.threads", c.threads, false);
  std::string path;
  r.get_string("ensemble.path", path);
  if (!path.empty()) c.ensemble_path = path;

  std::string case_id = std::string(case_name(c.scenario.case_id));
  r.get_string("scenario.case", case_id);
  c.scenario.case_id = parse_case(case_id);
  r.get("scenario.cutoff_time", c.scenario.cutoff_time, false);
  r.get("scenario.horizon_end", c.scenario.horizon_end, false);
  r.get("scenario.obs_stride", c.scenario.obs_stride, false);
  r.get("scenario.target_stride", c.scenario.target_stride, false);
  r.get("scenario.truth_realization", c.scenario.truth_realization, false);
  r.get("scenario.extra_obs_count", c.scenario.extra_obs_count, false);
  r.get("scenario.seed", c.scenario.seed, false);
  r.get("scenario.obs_noise_rel", c.scenario.obs_noise_rel, false);

  std::string family = "exponential";
  r.get_string("baseline.family", family);
  if (family == "exponential") {
    c.baseline.family = KernelFamily::Exponential;
  } else if (family == "squared_exponential") {
    c.baseline.family = KernelFamily::SquaredExponential;
  } else {
    throw ConfigError("field 'baseline.family': expected 'exponential' or 'squared_exponential'");
  }
  std::string mean_model = "constant";
  r.get_string("baseline.mean_model", mean_model);
  if (mean_model == "constant") {
    c.baseline.mean_model = MeanModel::ConstantFitted;
  } else if (mean_model == "zero") {
    c.baseline.mean_model = MeanModel::Zero;
  } else {
    throw ConfigError("field 'baseline.mean_model': expected 'constant' or 'zero'");
  }

  std::string dir;
  r.get_string("output.dir", dir);
  if (!dir.empty()) c.output_dir = dir;

  r.reject_unknown();
  return c;
}

[[nodiscard]] inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace swinggp
