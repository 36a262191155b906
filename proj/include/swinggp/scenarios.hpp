#pragma once

// Case studies: forecast the swing-equation state past an observation cutoff
// from a held-out truth trajectory.
//
//   Case1       observe θ and ω for t < cutoff; forecast θ, ω after it
//   Case2       observe θ; forecast θ after the cutoff, ω and P'_m on [0, horizon]
//   Case3       observe ω; forecast ω after the cutoff, θ and P'_m on [0, horizon]
//   Case3Extra  Case3 plus `extra_obs_count` ω samples spread uniformly over
//               (cutoff, horizon]
//
// Truth trajectories come from a separate validation ensemble (its own
// master seed), so they can never be members of the prior ensemble.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swinggp/ensemble.hpp"
#include "swinggp/errors.hpp"
#include "swinggp/gpr.hpp"
#include "swinggp/kernel.hpp"
#include "swinggp/metrics.hpp"
#include "swinggp/sde.hpp"

namespace swinggp {

enum class CaseId { Case1, Case2, Case3, Case3Extra };

[[nodiscard]] constexpr std::string_view case_name(CaseId c) {
  switch (c) {
    case CaseId::Case1: return "case1";
    case CaseId::Case2: return "case2";
    case CaseId::Case3: return "case3";
    case CaseId::Case3Extra: return "case3extra";
  }
  return "?";
}

[[nodiscard]] inline CaseId parse_case(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (CaseId c : {CaseId::Case1, CaseId::Case2, CaseId::Case3, CaseId::Case3Extra}) {
    if (lower == case_name(c)) return c;
  }
  if (lower == "1") return CaseId::Case1;
  if (lower == "2") return CaseId::Case2;
  if (lower == "3") return CaseId::Case3;
  throw ConfigError("unknown case '" + std::string(s) + "' (expected case1, case2, case3 or case3extra)");
}

inline constexpr std::uint64_t kDefaultValidationSeed = 20190602;

struct ScenarioSpec {
  CaseId case_id = CaseId::Case1;
  double cutoff_time = 8.3375;
  double horizon_end = 12.5;
  std::size_t obs_stride = 5;
  std::size_t target_stride = 1;
  std::size_t truth_realization = 0;
  std::size_t extra_obs_count = 333;  // Case3Extra only
  std::uint64_t seed = kDefaultValidationSeed;  // master seed of the validation ensemble
  double obs_noise_rel = 1e-2;  // observation-noise variance, relative to the variable's prior variance

  /// Case3Extra with no extra observations is Case3.
  [[nodiscard]] CaseId effective_case() const {
    return (case_id == CaseId::Case3Extra && extra_obs_count == 0) ? CaseId::Case3 : case_id;
  }

  void validate() const {
    if (!(cutoff_time >= 0.0) || !std::isfinite(cutoff_time)) throw InvalidArgument("scenario.cutoff_time must be >= 0");
    if (!(horizon_end >= cutoff_time) || !std::isfinite(horizon_end)) {
      throw InvalidArgument("scenario.horizon_end must be >= scenario.cutoff_time");
    }
    if (obs_stride == 0) throw InvalidArgument("scenario.obs_stride must be >= 1");
    if (target_stride == 0) throw InvalidArgument("scenario.target_stride must be >= 1");
    if (!(obs_noise_rel >= 0.0) || !std::isfinite(obs_noise_rel)) {
      throw InvalidArgument("scenario.obs_noise_rel must be >= 0");
    }
  }

  void validate(const Ensemble& ens) const {
    validate();
    const double t_end = ens.time(ens.n_steps());
    if (horizon_end > t_end + 1e-9) {
      throw InvalidArgument("scenario.horizon_end exceeds the ensemble's final time");
    }
    if (seed == ens.master_seed()) {
      throw TruthLeakage("validation seed equals the prior ensemble's master seed");
    }
  }
};

/// Observation and target entries for a scenario.
struct ObservationPlan {
  IndexSet obs;
  IndexSet targets;
};

namespace detail {

struct GridSpan {
  std::size_t obs_end;       // observations use k < obs_end (t_k < cutoff)
  std::size_t first_after;   // first k with t_k > cutoff
  std::size_t last;          // last k with t_k ≤ horizon_end
};

[[nodiscard]] inline GridSpan grid_span(const ScenarioSpec& spec, double dt) {
  constexpr double eps = 1e-9;
  const double kc = spec.cutoff_time / dt;
  GridSpan g;
  g.obs_end = static_cast<std::size_t>(std::ceil(kc - eps));
  g.first_after = static_cast<std::size_t>(std::floor(kc + eps)) + 1;
  g.last = static_cast<std::size_t>(std::floor(spec.horizon_end / dt + eps));
  return g;
}

[[nodiscard]] inline IndexSet strided(Variable v, std::size_t first, std::size_t end_exclusive,
                                      std::size_t stride) {
  return IndexSet::range(v, first, end_exclusive, stride);
}

// Steps for `count` samples at cutoff + j (horizon − cutoff) / count, j = 1..count.
[[nodiscard]] inline std::vector<std::size_t> extra_steps(const ScenarioSpec& spec, double dt,
                                                          const GridSpan& g) {
  std::vector<std::size_t> ks;
  const double width = spec.horizon_end - spec.cutoff_time;
  for (std::size_t j = 1; j <= spec.extra_obs_count; ++j) {
    const double t = spec.cutoff_time + static_cast<double>(j) * width / static_cast<double>(spec.extra_obs_count);
    const auto k = static_cast<std::size_t>(std::llround(t / dt));
    if (k < g.first_after || k > g.last) continue;
    if (!ks.empty() && ks.back() == k) continue;
    ks.push_back(k);
  }
  return ks;
}

}  // namespace detail

[[nodiscard]] inline ObservationPlan plan_for(const ScenarioSpec& spec, double dt) {
  spec.validate();
  const detail::GridSpan g = detail::grid_span(spec, dt);
  auto before = [&](Variable v) { return detail::strided(v, 0, g.obs_end, spec.obs_stride); };
  auto after = [&](Variable v) { return detail::strided(v, g.first_after, g.last + 1, spec.target_stride); };
  auto full = [&](Variable v) { return detail::strided(v, 0, g.last + 1, spec.target_stride); };

  ObservationPlan plan;
  switch (spec.effective_case()) {
    case CaseId::Case1:
      plan.obs = before(Variable::Theta).concat(before(Variable::Omega));
      plan.targets = after(Variable::Theta).concat(after(Variable::Omega));
      break;
    case CaseId::Case2:
      plan.obs = before(Variable::Theta);
      plan.targets = after(Variable::Theta).concat(full(Variable::Omega)).concat(full(Variable::PmPrime));
      break;
    case CaseId::Case3:
    case CaseId::Case3Extra: {
      plan.obs = before(Variable::Omega);
      if (spec.effective_case() == CaseId::Case3Extra) {
        std::vector<IndexEntry> extra;
        for (std::size_t k : detail::extra_steps(spec, dt, g)) extra.push_back({Variable::Omega, k});
        plan.obs = plan.obs.concat(IndexSet(std::move(extra)));
      }
      plan.targets = after(Variable::Omega).concat(full(Variable::Theta)).concat(full(Variable::PmPrime));
      break;
    }
  }
  return plan;
}

struct ScenarioResult {
  ScenarioSpec spec;
  ForecastResult forecast;                     // every target, in plan order
  std::map<Variable, ForecastResult> by_variable;
  MetricsReport metrics;
  std::size_t n_obs = 0;
  StreamId truth_stream;
};

/// The held-out truth for `spec`: realization `truth_realization` of the
/// validation ensemble, simulated with the prior ensemble's physics.
[[nodiscard]] inline Trajectory validation_truth(const ScenarioSpec& spec, const Ensemble& ens) {
  spec.validate(ens);
  SimConfig sim = ens.sim();
  sim.seed = spec.seed;
  return simulate_realization(ens.grid(), ens.ou(), sim, spec.truth_realization);
}

/// Physics-informed forecaster for a fixed prior ensemble and observation
/// plan. The prior moments and the factorization are computed once; `run`
/// conditions on any number of truth trajectories.
class ScenarioRunner {
public:
  ScenarioRunner(const Ensemble& ens, const ScenarioSpec& spec, ObservationPlan plan)
      : ens_(&ens), spec_(spec), prior_(std::make_unique<JointPrior>()) {
    spec_.validate(ens);
    const MomentView view(ens);
    *prior_ = build_prior(view, plan.obs, plan.targets, TargetCov::DiagonalOnly);
    set_relative_observation_noise(*prior_, spec_.obs_noise_rel);
    conditioner_ = std::make_unique<Conditioner>(*prior_);
  }

  ScenarioRunner(const Ensemble& ens, const ScenarioSpec& spec)
      : ScenarioRunner(ens, spec, plan_for(spec, ens.dt())) {}

  [[nodiscard]] const JointPrior& prior() const { return *prior_; }
  [[nodiscard]] const ScenarioSpec& spec() const { return spec_; }

  [[nodiscard]] ScenarioResult run(const Trajectory& truth) const {
    if (truth.stream.master_seed == ens_->master_seed()) {
      throw TruthLeakage("truth trajectory was drawn from the prior ensemble's seed");
    }
    Observations obs{prior_->obs_idx, Eigen::VectorXd(static_cast<Eigen::Index>(prior_->obs_idx.size()))};
    for (std::size_t i = 0; i < obs.idx.size(); ++i) {
      const IndexEntry e = obs.idx[i];
      if (e.k >= truth.states.size()) throw AlignmentError("truth trajectory is shorter than the observation window");
      obs.values(static_cast<Eigen::Index>(i)) = component(truth.states[e.k], e.var);
    }

    ScenarioResult r;
    r.spec = spec_;
    r.n_obs = obs.idx.size();
    r.truth_stream = truth.stream;
    r.forecast = conditioner_->apply(obs);
    for (Variable v : kAllVariables) {
      ForecastResult part = select_variable(r.forecast, v);
      if (part.size() > 0) r.by_variable.emplace(v, std::move(part));
    }
    r.metrics = compute_metrics(r.forecast, truth, MetricsConfig{spec_.cutoff_time});
    return r;
  }

private:
  const Ensemble* ens_;
  ScenarioSpec spec_;
  std::unique_ptr<JointPrior> prior_;  // heap-held: the conditioner keeps a pointer to it
  std::unique_ptr<Conditioner> conditioner_;
};

[[nodiscard]] inline ScenarioResult run_scenario(const ScenarioSpec& spec, const Ensemble& ens) {
  return ScenarioRunner(ens, spec).run(validation_truth(spec, ens));
}

[[nodiscard]] inline ScenarioResult run_case1(const ScenarioSpec& spec, const Ensemble& ens) {
  if (spec.case_id != CaseId::Case1) throw InvalidArgument("run_case1 requires case_id Case1");
  return run_scenario(spec, ens);
}

[[nodiscard]] inline ScenarioResult run_case2(const ScenarioSpec& spec, const Ensemble& ens) {
  if (spec.case_id != CaseId::Case2) throw InvalidArgument("run_case2 requires case_id Case2");
  return run_scenario(spec, ens);
}

[[nodiscard]] inline ScenarioResult run_case3(const ScenarioSpec& spec, const Ensemble& ens) {
  if (spec.case_id != CaseId::Case3 && spec.case_id != CaseId::Case3Extra) {
    throw InvalidArgument("run_case3 requires case_id Case3 or Case3Extra");
  }
  return run_scenario(spec, ens);
}

// ---------------------------------------------------------------------------
// Physics-informed vs. data-driven comparison

struct BaselineOptions {
  KernelFamily family = KernelFamily::Exponential;
  MeanModel mean_model = MeanModel::ConstantFitted;
  FitOptions fit;
};

struct BaselineComparison {
  ScenarioResult physics;
  std::map<Variable, KernelFit> fits;
  std::map<Variable, ForecastResult> baseline;
  MetricsReport baseline_metrics;
};

/// Data-driven forecast of each Case1 variable from its own history.
[[nodiscard]] inline BaselineComparison compare_with_baseline(const ScenarioRunner& physics,
                                                              const Trajectory& truth,
                                                              const BaselineOptions& opt = {}) {
  const ScenarioSpec& spec = physics.spec();
  if (spec.case_id != CaseId::Case1) {
    throw InvalidArgument("baseline comparison needs the Case1 layout (same-variable history)");
  }
  BaselineComparison out;
  out.physics = physics.run(truth);

  const JointPrior& prior = physics.prior();
  const double dt = truth.times.size() > 1 ? truth.times[1] - truth.times[0] : 0.0;
  ForecastResult merged;
  std::vector<IndexEntry> merged_idx;
  std::vector<double> mean, sd, pmean, psd;
  for (Variable v : {Variable::Theta, Variable::Omega}) {
    std::vector<IndexEntry> oi, ti;
    for (const auto& e : prior.obs_idx) if (e.var == v) oi.push_back(e);
    for (const auto& e : prior.target_idx) if (e.var == v) ti.push_back(e);
    Observations obs{IndexSet(oi), Eigen::VectorXd(static_cast<Eigen::Index>(oi.size()))};
    for (std::size_t i = 0; i < oi.size(); ++i) {
      obs.values(static_cast<Eigen::Index>(i)) = component(truth.states[oi[i].k], v);
    }
    KernelFit fit = fit_hyperparameters(obs, dt, opt.family, opt.mean_model, opt.fit);
    ForecastResult f = baseline_forecast(obs, dt, fit.kernel, IndexSet(ti), opt.mean_model, TargetCov::DiagonalOnly);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      merged_idx.push_back(f.target_idx[i]);
      merged.target_times.push_back(f.target_times[i]);
      mean.push_back(f.posterior_mean(ii));
      sd.push_back(f.posterior_std(ii));
      pmean.push_back(f.prior_mean(ii));
      psd.push_back(f.prior_std(ii));
    }
    out.fits.emplace(v, std::move(fit));
    out.baseline.emplace(v, std::move(f));
  }
  merged.target_idx = IndexSet(std::move(merged_idx));
  merged.posterior_mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  merged.posterior_std = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  merged.prior_mean = Eigen::Map<Eigen::VectorXd>(pmean.data(), static_cast<Eigen::Index>(pmean.size()));
  merged.prior_std = Eigen::Map<Eigen::VectorXd>(psd.data(), static_cast<Eigen::Index>(psd.size()));
  out.baseline_metrics = compute_metrics(merged, truth, MetricsConfig{spec.cutoff_time});
  return out;
}

[[nodiscard]] inline BaselineComparison run_baseline_comparison(const ScenarioSpec& spec,
                                                                const Ensemble& ens,
                                                                const BaselineOptions& opt = {}) {
  const ScenarioRunner runner(ens, spec);
  return compare_with_baseline(runner, validation_truth(spec, ens), opt);
}

}  // namespace swinggp
