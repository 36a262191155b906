#pragma once

// Command implementations behind the swinggp CLI. Each returns a process exit
// code and writes diagnostics to `err`:
//
//   0  success
//   1  unexpected internal error
//   2  configuration or input-file problem
//   3  simulation diverged
//   4  numerical failure (singular prior, kernel fit failed)
//
// Every output file gets a `<name>.meta.json` sidecar echoing the full
// configuration and the seeds needed to reproduce it. Thread counts are not
// echoed: they never change results.

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "json.hpp"

#include "swinggp/config.hpp"
#include "swinggp/ensemble.hpp"
#include "swinggp/ensemble_io.hpp"
#include "swinggp/errors.hpp"
#include "swinggp/output.hpp"
#include "swinggp/scenarios.hpp"

namespace swinggp {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitConfig = 2, kExitSimulation = 3, kExitNumerical = 4 };

namespace detail {

[[nodiscard]] inline nlohmann::ordered_json physics_echo(const GridParams& g, const OuParams& ou,
                                                         const SimConfig& s) {
  return {{"grid", to_json(g)}, {"ou", to_json(ou)}, {"sim", to_json(s)}};
}

[[nodiscard]] inline nlohmann::ordered_json ensemble_echo(const Ensemble& ens) {
  nlohmann::ordered_json j = physics_echo(ens.grid(), ens.ou(), ens.sim());
  j["ensemble"] = {{"n", ens.n_realizations()}, {"master_seed", ens.master_seed()}};
  return j;
}

[[nodiscard]] inline nlohmann::ordered_json sidecar(std::string_view command, std::string_view file,
                                                    nlohmann::ordered_json config) {
  return {{"tool", "swinggp"}, {"command", command}, {"file", file}, {"config", std::move(config)}};
}

inline void emit(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                 const nlohmann::ordered_json& meta) {
  const std::filesystem::path path = dir / name;
  write_text_file(path, content);
  write_sidecar(path, meta);
}

inline void prepare_output(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string());
  }
}

[[nodiscard]] inline Ensemble obtain_ensemble(const RunConfig& cfg) {
  if (cfg.ensemble_path) return load_ensemble(*cfg.ensemble_path);
  return run_ensemble(cfg.grid, cfg.ou, cfg.sim, cfg.ensemble_n, cfg.threads);
}

[[nodiscard]] inline nlohmann::ordered_json prior_echo(const JointPrior& prior, double nugget) {
  double noise = 0.0;
  if (prior.obs_noise.size() != 0) noise = prior.obs_noise.maxCoeff();
  return {{"n_obs", prior.obs_idx.size()}, {"n_targets", prior.target_idx.size()},
          {"nugget", nugget},              {"obs_noise_max", noise}};
}

inline void write_forecast_outputs(const std::filesystem::path& dir, std::string_view command,
                                   std::string_view prefix, const ScenarioResult& r,
                                   const Trajectory& truth, const nlohmann::ordered_json& echo) {
  const std::string forecast_name = std::string(prefix) + "forecast.csv";
  emit(dir, forecast_name, forecast_csv(r.forecast, r.spec.cutoff_time), sidecar(command, forecast_name, echo));
  for (const auto& [v, f] : r.by_variable) {
    const std::string name = std::string(prefix) + "plot_" + std::string(variable_name(v)) + ".csv";
    emit(dir, name, plot_csv(f, truth), sidecar(command, name, echo));
  }
}

// Runs `body`, mapping library errors to exit codes.
[[nodiscard]] inline int guarded(std::ostream& err, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const IntegrationDiverged& e) {
    err << "error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const SingularPrior& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const FitFailed& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    // Config, argument, I/O and format errors: the inputs need fixing.
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace detail

/// Realization 0 of the configured seed as `trajectory.csv`.
[[nodiscard]] inline int cmd_simulate(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    cfg.validate();
    detail::prepare_output(cfg.output_dir);
    const Trajectory traj = simulate_realization(cfg.grid, cfg.ou, cfg.sim, 0);
    nlohmann::ordered_json echo = detail::physics_echo(cfg.grid, cfg.ou, cfg.sim);
    echo["realization"] = traj.stream.index;
    detail::emit(cfg.output_dir, "trajectory.csv", trajectory_csv(traj),
                 detail::sidecar("simulate", "trajectory.csv", echo));
  });
}

/// `ensemble.bin` plus `ensemble_summary.csv` (per-time mean and std).
[[nodiscard]] inline int cmd_ensemble(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    cfg.validate();
    detail::prepare_output(cfg.output_dir);
    const Ensemble ens = run_ensemble(cfg.grid, cfg.ou, cfg.sim, cfg.ensemble_n, cfg.threads);
    const std::filesystem::path bin = cfg.output_dir / "ensemble.bin";
    save_ensemble(ens, bin);
    nlohmann::ordered_json echo = detail::ensemble_echo(ens);
    echo["checksum"] = ensemble_checksum(ens);
    write_sidecar(bin, detail::sidecar("ensemble", "ensemble.bin", echo));
    detail::emit(cfg.output_dir, "ensemble_summary.csv", ensemble_summary_csv(ens),
                 detail::sidecar("ensemble", "ensemble_summary.csv", echo));
  });
}

/// Physics-informed forecast for the configured case: `forecast.csv`,
/// `plot_<variable>.csv` and `metrics.json`.
[[nodiscard]] inline int cmd_forecast(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    cfg.validate();
    detail::prepare_output(cfg.output_dir);
    const Ensemble ens = detail::obtain_ensemble(cfg);
    const ScenarioRunner runner(ens, cfg.scenario);
    const Trajectory truth = validation_truth(cfg.scenario, ens);
    const ScenarioResult r = runner.run(truth);

    nlohmann::ordered_json echo = detail::ensemble_echo(ens);
    echo["scenario"] = to_json(cfg.scenario);
    echo["prior"] = detail::prior_echo(runner.prior(), r.forecast.nugget_used);
    detail::write_forecast_outputs(cfg.output_dir, "forecast", "", r, truth, echo);

    nlohmann::ordered_json metrics = detail::sidecar("forecast", "metrics.json", echo);
    metrics["metrics"] = to_json(r.metrics);
    write_text_file(cfg.output_dir / "metrics.json", metrics.dump(2) + "\n");
  });
}

/// Physics-informed vs. data-driven forecasts on the Case1 layout. Writes
/// both methods' forecasts and plot data (`baseline_` prefix for the
/// kernel model) and `comparison.json`.
[[nodiscard]] inline int cmd_compare(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    RunConfig c = cfg;
    if (c.scenario.case_id != CaseId::Case1) {
      throw ConfigError("compare requires scenario.case = case1 (the baseline needs same-variable history)");
    }
    c.validate();
    detail::prepare_output(c.output_dir);
    const Ensemble ens = detail::obtain_ensemble(c);
    const ScenarioRunner runner(ens, c.scenario);
    const Trajectory truth = validation_truth(c.scenario, ens);
    const BaselineComparison cmp = compare_with_baseline(runner, truth, c.baseline);

    nlohmann::ordered_json echo = detail::ensemble_echo(ens);
    echo["scenario"] = to_json(c.scenario);
    echo["prior"] = detail::prior_echo(runner.prior(), cmp.physics.forecast.nugget_used);
    nlohmann::ordered_json kernels = nlohmann::ordered_json::object();
    for (const auto& [v, fit] : cmp.fits) {
      kernels[std::string(variable_name(v))] = {{"kernel", to_json(fit.kernel)},
                                                {"mean_model", mean_model_name(fit.mean_model)},
                                                {"mean", fit.mean},
                                                {"nlml", fit.nlml}};
    }
    echo["baseline"] = kernels;

    detail::write_forecast_outputs(c.output_dir, "compare", "", cmp.physics, truth, echo);
    for (const auto& [v, f] : cmp.baseline) {
      const std::string name = "baseline_forecast_" + std::string(variable_name(v)) + ".csv";
      detail::emit(c.output_dir, name, forecast_csv(f, c.scenario.cutoff_time), detail::sidecar("compare", name, echo));
    }
    for (const auto& [v, f] : cmp.baseline) {
      const std::string name = "baseline_plot_" + std::string(variable_name(v)) + ".csv";
      detail::emit(c.output_dir, name, plot_csv(f, truth), detail::sidecar("compare", name, echo));
    }

    nlohmann::ordered_json report = detail::sidecar("compare", "comparison.json", echo);
    report["physics_informed"] = to_json(cmp.physics.metrics);
    report["data_driven"] = to_json(cmp.baseline_metrics);
    nlohmann::ordered_json verdict = nlohmann::ordered_json::object();
    for (Variable v : {Variable::Theta, Variable::Omega}) {
      const double hp = cmp.physics.metrics.mean_horizon.count(v) ? cmp.physics.metrics.mean_horizon.at(v) : 0.0;
      const double hb = cmp.baseline_metrics.mean_horizon.count(v) ? cmp.baseline_metrics.mean_horizon.at(v) : 0.0;
      verdict[std::string(variable_name(v))] = {{"physics_horizon_s", hp},
                                                {"baseline_horizon_s", hb},
                                                {"physics_at_least_baseline", hp >= hb}};
    }
    report["mean_horizon"] = verdict;
    write_text_file(c.output_dir / "comparison.json", report.dump(2) + "\n");
  });
}

}  // namespace swinggp
