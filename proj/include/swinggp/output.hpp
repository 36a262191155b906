#pragma once

// CSV and JSON emission. Numbers are written with std::to_chars (shortest
// round-trip form), so output is locale-independent and byte-stable.
// Time columns use 12 significant digits to hide k * dt round-off.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>

#include "json.hpp"

#include "swinggp/ensemble.hpp"
#include "swinggp/errors.hpp"
#include "swinggp/gpr.hpp"
#include "swinggp/kernel.hpp"
#include "swinggp/metrics.hpp"
#include "swinggp/scenarios.hpp"
#include "swinggp/sde.hpp"

namespace swinggp {

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline void append_time(std::string& out, double t) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), t, std::chars_format::general, 12);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

/// Writes `meta` as `<path>.meta.json`.
inline void write_sidecar(const std::filesystem::path& path, const nlohmann::ordered_json& meta) {
  std::filesystem::path side = path;
  side += ".meta.json";
  write_text_file(side, meta.dump(2) + "\n");
}

// --- trajectory / ensemble summary -----------------------------------------

[[nodiscard]] inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "time_s,theta,omega,pm_prime\n";
  out.reserve(traj.states.size() * 64);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    detail::append_time(out, traj.times[k]);
    for (Variable v : kAllVariables) {
      out += ',';
      detail::append_number(out, component(traj.states[k], v));
    }
    out += '\n';
  }
  return out;
}

/// Per-time ensemble mean and (unbiased) standard deviation of each variable.
[[nodiscard]] inline std::string ensemble_summary_csv(const Ensemble& ens) {
  const MomentView view(ens);
  std::string out = "time_s,theta_mean,theta_std,omega_mean,omega_std,pm_prime_mean,pm_prime_std\n";
  std::array<Eigen::VectorXd, kNumVariables> sd;
  for (Variable v : kAllVariables) {
    sd[static_cast<std::size_t>(v)] = view.variance(IndexSet::range(v, 0, ens.n_times())).cwiseSqrt();
  }
  for (std::size_t k = 0; k < ens.n_times(); ++k) {
    detail::append_time(out, ens.time(k));
    for (Variable v : kAllVariables) {
      out += ',';
      detail::append_number(out, view.mean(v, k));
      out += ',';
      detail::append_number(out, sd[static_cast<std::size_t>(v)](static_cast<Eigen::Index>(k)));
    }
    out += '\n';
  }
  return out;
}

// --- forecasts --------------------------------------------------------------

/// ForecastResult rows: variable, time_s, posterior_mean, posterior_std, is_observed_period.
/// A target is in the observed period when its time is strictly before `cutoff`.
[[nodiscard]] inline std::string forecast_csv(const ForecastResult& r, double cutoff) {
  std::string out = "variable,time_s,posterior_mean,posterior_std,is_observed_period\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out += variable_name(r.target_idx[i].var);
    out += ',';
    detail::append_time(out, r.target_times[i]);
    out += ',';
    detail::append_number(out, r.posterior_mean(ii));
    out += ',';
    detail::append_number(out, r.posterior_std(ii));
    out += classify(r.target_times[i], cutoff) == Window::Observed ? ",1\n" : ",0\n";
  }
  return out;
}

/// Plot data for one variable: time, truth, mean, mean − 2σ, mean + 2σ.
[[nodiscard]] inline std::string plot_csv(const ForecastResult& r, const Trajectory& truth) {
  std::string out = "time_s,truth,mean,lower,upper\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const IndexEntry e = r.target_idx[i];
    const double m = r.posterior_mean(ii);
    const double s = r.posterior_std(ii);
    detail::append_time(out, r.target_times[i]);
    out += ',';
    detail::append_number(out, component(truth.states.at(e.k), e.var));
    out += ',';
    detail::append_number(out, m);
    out += ',';
    detail::append_number(out, m - 2.0 * s);
    out += ',';
    detail::append_number(out, m + 2.0 * s);
    out += '\n';
  }
  return out;
}

// --- JSON echoes ------------------------------------------------------------

[[nodiscard]] inline nlohmann::ordered_json to_json(const GridParams& g) {
  return {{"p_max", g.p_max},       {"h_inertia", g.h_inertia}, {"damping", g.damping},
          {"p_m_mean", g.p_m_mean}, {"omega_b", g.omega_b},     {"omega_s", g.omega_s}};
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const OuParams& ou) {
  return {{"sigma", ou.sigma}, {"lambda", ou.lambda}};
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const SimConfig& s) {
  return {{"dt", s.dt},
          {"t_end", s.t_end},
          {"seed", s.seed},
          {"init_theta", s.init_theta},
          {"init_omega", s.init_omega},
          {"init_pm_mode", s.init_pm_mode == InitPmMode::Fixed ? "fixed" : "stationary"},
          {"init_pm_value", s.init_pm_value}};
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const ScenarioSpec& s) {
  nlohmann::ordered_json j = {{"case", case_name(s.effective_case())},
                              {"cutoff_time", s.cutoff_time},
                              {"horizon_end", s.horizon_end},
                              {"obs_stride", s.obs_stride},
                              {"target_stride", s.target_stride},
                              {"truth_realization", s.truth_realization},
                              {"validation_seed", s.seed},
                              {"obs_noise_rel", s.obs_noise_rel}};
  if (s.effective_case() == CaseId::Case3Extra) j["extra_obs_count"] = s.extra_obs_count;
  return j;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const KernelSpec& k) {
  return {{"family", family_name(k.family)},
          {"amplitude", k.amplitude},
          {"length_scale", k.length_scale},
          {"noise_floor", k.noise_floor}};
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const MetricsReport& m) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (Variable v : kAllVariables) {
    nlohmann::ordered_json var = nlohmann::ordered_json::object();
    nlohmann::ordered_json windows = nlohmann::ordered_json::object();
    for (Window w : kAllWindows) {
      const WindowStats* s = m.find(v, w);
      if (s == nullptr) continue;
      windows[std::string(window_name(w))] = {{"count", s->count},
                                              {"rmse", s->rmse},
                                              {"coverage_2sigma", s->coverage},
                                              {"prior_std_rms", s->prior_std_rms},
                                              {"posterior_std_median", s->posterior_std_median},
                                              {"prior_std_median", s->prior_std_median},
                                              {"shrink_fraction", s->shrink_fraction}};
    }
    if (windows.empty()) continue;
    var["windows"] = std::move(windows);
    if (auto it = m.coverage_2sigma.find(v); it != m.coverage_2sigma.end()) var["coverage_2sigma"] = it->second;
    if (auto it = m.mean_horizon.find(v); it != m.mean_horizon.end()) {
      var["mean_horizon_s"] = it->second;
      var["mean_horizon_censored"] = m.horizon_censored.at(v);
    }
    out[std::string(variable_name(v))] = std::move(var);
  }
  return out;
}

}  // namespace swinggp
